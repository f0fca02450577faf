"""Arithmetic expressions over ``(t, x)`` for user-defined potentials and data.

Only numbers, the variables ``t`` and ``x``, the constants ``pi`` and ``e``,
``+ - * / **`` and the functions ``sin cos exp sqrt`` are accepted.  Time
derivatives are taken symbolically so the integrators receive analytic
``d_t W``.
"""
from __future__ import annotations

import ast
import operator
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy

from ..errors import ConfigError

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
_CONSTS = {"pi": np.pi, "e": np.e}
_VARS = ("t", "x")
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _compile(node: ast.AST) -> Callable[[dict], object]:
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        v = float(node.value)
        return lambda env: v
    if isinstance(node, ast.Name):
        if node.id in _VARS:
            name = node.id
            return lambda env: env[name]
        if node.id in _CONSTS:
            v = _CONSTS[node.id]
            return lambda env: v
        raise ConfigError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        lhs, rhs = _compile(node.left), _compile(node.right)
        return lambda env: op(lhs(env), rhs(env))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op = _UNARY[type(node.op)]
        arg = _compile(node.operand)
        return lambda env: op(arg(env))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords or len(node.args) != 1:
            raise ConfigError(f"unsupported call {ast.dump(node.func)}")
        fn = _FUNCS[node.func.id]
        arg = _compile(node.args[0])
        return lambda env: fn(arg(env))
    raise ConfigError(f"unsupported syntax: {type(node).__name__}")


def _parse(src: str) -> ast.Expression:
    try:
        return ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {src!r}: {exc.msg}") from None


def _names(tree: ast.AST) -> set[str]:
    return {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}


@dataclass(frozen=True)
class Expression:
    """A validated expression; call it as ``expr(t, x)``."""

    source: str

    def __post_init__(self):
        tree = _parse(self.source)
        object.__setattr__(self, "_fn", _compile(tree))
        object.__setattr__(self, "_uses_t", "t" in _names(tree))

    @property
    def depends_on_t(self) -> bool:
        return self._uses_t

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self._fn({"t": t, "x": x}), dtype=float), x.shape)

    def d_dt(self) -> "Expression":
        """Symbolic time derivative, itself a validated :class:`Expression`."""
        t, x = sympy.symbols("t x", real=True)
        local = {"t": t, "x": x, "pi": sympy.pi, "e": sympy.E, **{f: getattr(sympy, f) for f in _FUNCS}}
        d = sympy.diff(sympy.sympify(self.source, locals=local), t)
        src = sympy.sstr(d).replace("E", "e")
        return Expression(src)


def compile_expression(src: str) -> Expression:
    return Expression(src)
