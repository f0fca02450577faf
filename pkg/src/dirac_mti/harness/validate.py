"""Fast invariant checks run by ``dirac-mti validate`` (a few seconds in total)."""
from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from ..mti import evolve, free_propagator
from ..potentials import FREE, nm_initial, nm_potential
from ..spectral import SpinorField, fwd, inv, make_grid, mass, mode_table
from ..tsfp import potential_exponential, tsfp_evolve, tsfp_propagators
from .reference import read_snapshot, write_snapshot


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tol: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (tol {self.tol:.0e})"


def _check(name, value, tol) -> Check:
    value = float(value)
    return Check(name, bool(value <= tol), value, tol)


def _projectors():
    g = make_grid(-16, 16, 64)
    worst = 0.0
    for eps in (1.0, 0.1, 1e-3):
        t = mode_table(g, eps)
        for l in (-32, -5, 0, 1, 31):
            Pp, Pm = t.projector(l, +1), t.projector(l, -1)
            worst = max(
                worst,
                np.abs(Pp + Pm - np.eye(2)).max(),
                np.abs(Pp @ Pp - Pp).max(),
                np.abs(Pp @ Pm).max(),
            )
    return _check("projectors complete and idempotent", worst, 1e-13)


def _free_mti():
    g = make_grid(-16, 16, 128)
    f0 = nm_initial(g)
    worst = 0.0
    for eps in (1.0, 0.1, 0.01):
        t = mode_table(g, eps)
        out = evolve(f0, FREE, eps, 0.01, 1.0, table=t)
        exact = inv(free_propagator(fwd(f0.values), t, 1.0))
        worst = max(worst, np.sqrt(g.h * np.sum(np.abs(out.field.values - exact) ** 2)))
    return _check("MTI-FP exact for W = 0", worst, 1e-11)


def _tsfp_mass():
    g = make_grid(-16, 16, 256)
    f0 = nm_initial(g)
    m0 = mass(f0)
    out = tsfp_evolve(f0, nm_potential(), 0.5, 0.01, 2.0)
    return _check("TSFP relative mass drift (200 steps)", abs(mass(out.field) - m0) / m0, 1e-12)


def _kinetic_expm():
    g = make_grid(-16, 16, 64)
    worst = 0.0
    for eps in (1.0, 0.25):
        t = mode_table(g, eps)
        props = tsfp_propagators(t, 0.05)
        for l in (-32, -3, 0, 7, 31):
            ref = expm(-1j * 0.05 * t.symbol(l) / eps**2)
            worst = max(worst, np.abs(props.matrix(l) - ref).max())
    return _check("TSFP kinetic matrices vs expm", worst, 1e-12)


def _potential_expm():
    d, o = potential_exponential(np.array([2.0]), np.array([3.0]), 0.1)
    closed = np.array([[d[0], o[0]], [o[0], d[0]]])
    ref = expm(-1j * 0.1 * np.array([[2.0, -3.0], [-3.0, 2.0]]))
    return _check("pointwise exp(-isW) closed form", np.abs(closed - ref).max(), 1e-13)


def _pauli_symbol():
    g = make_grid(-16, 16, 128)
    worst = 0.0
    for eps in (1.0, 0.1, 1e-4):
        t = mode_table(g, eps)
        worst = max(worst, np.abs(t.delta_minus / eps**2 - t.mu**2 / (t.delta + 1)).max())
    return _check("delta^-/eps^2 = mu^2/(delta+1)", worst, 1e-12)


def _cache_roundtrip():
    g = make_grid(-16, 16, 32)
    rng = np.random.default_rng(0)
    f = SpinorField(g, rng.standard_normal((2, 32)) + 1j * rng.standard_normal((2, 32)))
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "ref.bin"
        write_snapshot(p, f, 0.5, 2.0)
        back, eps, t = read_snapshot(p)
    err = np.abs(back.values - f.values).max() + abs(eps - 0.5) + abs(t - 2.0)
    return _check("reference cache round trip", err, 0.0)


CHECKS = (_projectors, _free_mti, _tsfp_mass, _kinetic_expm, _potential_expm, _pauli_symbol, _cache_roundtrip)


def run_validation() -> list[Check]:
    return [c() for c in CHECKS]
