"""Declarative experiment configuration (a single JSON document)."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError
from ..potentials import PotentialSampler, nm_initial, nm_potential
from ..spectral import Grid, SpinorField, make_grid
from .expr import Expression

Method = Literal["mti", "tsfp", "schrodinger", "pauli"]


class ExpressionCase(BaseModel):
    """User-supplied potentials and initial data as expressions in ``t`` and ``x``."""

    model_config = ConfigDict(extra="forbid")

    V: str = "0"
    A1: str = "0"
    phi1: str
    phi2: str

    @field_validator("V", "A1", "phi1", "phi2")
    @classmethod
    def _valid(cls, v: str) -> str:
        Expression(v)
        return v


class ReferenceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    h_e: float = 1.0 / 32.0
    tau_e: float = 1e-6
    # extra snapshot times written alongside T
    times: list[float] = Field(default_factory=list)
    # companion run at 2*tau_e feeding the reference-validity gate
    check: bool = True

    @field_validator("h_e", "tau_e")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: tuple[float, float] = (-16.0, 16.0)
    case: Union[Literal["nm"], ExpressionCase] = "nm"
    epsilons: list[float] = Field(default_factory=lambda: [1.0])
    M: Optional[list[int]] = None
    h: Optional[list[float]] = None
    taus: list[float] = Field(default_factory=lambda: [0.1])
    T: float = 2.0
    method: Method = "mti"
    reference: ReferenceSpec = Field(default_factory=ReferenceSpec)
    observer_every: int = 100
    out_dir: Optional[str] = None
    threads: Optional[int] = None
    plot_data: bool = False

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        a, b = self.domain
        if not b > a:
            raise ValueError("domain must satisfy a < b")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.epsilons or any(not 0 < e <= 1 for e in self.epsilons):
            raise ValueError("every epsilon must lie in (0, 1]")
        if not self.taus or any(not 0 < t <= self.T for t in self.taus):
            raise ValueError("every tau must lie in (0, T]")
        if self.M is None and self.h is None:
            self.M = [self.reference_M]
        elif self.M is None:
            self.M = [_count(b - a, h, "h") for h in self.h]
        elif self.h is not None:
            raise ValueError("give either M or h, not both")
        for m in self.M:
            make_grid(a, b, m)
        if self.observer_every < 1:
            raise ValueError("observer_every must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")
        return self

    # -- derived quantities -------------------------------------------------

    @property
    def reference_M(self) -> int:
        a, b = self.domain
        return _count(b - a, self.reference.h_e, "h_e")

    def grid(self, M: int) -> Grid:
        return make_grid(self.domain[0], self.domain[1], M)

    def reference_grid(self) -> Grid:
        return self.grid(self.reference_M)

    def check_reference_refines(self) -> None:
        """Every study grid must be a sub-grid of the reference grid."""
        ref = self.reference_grid()
        bad = [m for m in self.M if not self.grid(m).is_subgrid_of(ref)]
        if bad:
            raise ConfigError(f"reference grid M={ref.M} does not refine study grids M={bad}")

    def sampler(self) -> PotentialSampler:
        if self.case == "nm":
            return nm_potential()
        V, A1 = Expression(self.case.V), Expression(self.case.A1)
        if not (V.depends_on_t or A1.depends_on_t):
            return PotentialSampler(V=V, A1=A1)
        return PotentialSampler(V=V, A1=A1, dV=V.d_dt(), dA1=A1.d_dt(), time_independent=False)

    def initial(self, grid: Grid) -> SpinorField:
        if self.case == "nm":
            return nm_initial(grid)
        p1, p2 = Expression(self.case.phi1), Expression(self.case.phi2)
        return SpinorField.from_functions(grid, lambda x: p1(0.0, x), lambda x: p2(0.0, x))

    def case_key(self) -> str:
        """Directory-safe identifier of (case, domain)."""
        a, b = self.domain
        if self.case == "nm":
            tag = "nm"
        else:
            tag = "expr-" + _digest(self.case.model_dump())[:12]
        return f"{tag}_a{a!r}_b{b!r}"

    def physics_hash(self) -> str:
        """Hash of everything that changes a cell's value except the cell key."""
        return _digest(
            {
                "domain": list(self.domain),
                "case": self.case if self.case == "nm" else self.case.model_dump(),
                "T": self.T,
                "method": self.method,
                "h_e": self.reference.h_e,
                "tau_e": self.reference.tau_e,
            }
        )[:16]


def _count(length: float, h: float, what: str) -> int:
    n = length / h
    m = round(n)
    if m < 1 or abs(n - m) > 1e-9 * n:
        raise ValueError(f"{what}={h} does not divide the domain length {length}")
    return int(m)


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def load_config(path: str | os.PathLike) -> RunConfig:
    """Read and validate a JSON config; every failure becomes :class:`ConfigError`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None


def cache_root() -> Path:
    env = os.environ.get("DIRAC_MTI_CACHE")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "dirac-mti"
