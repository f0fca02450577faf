"""Electromagnetic potentials ``W = V I - A1 sigma_1`` and initial data."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import Grid, SpinorField

ScalarFn = Callable[[float, np.ndarray], np.ndarray]


def _zero(t, x):
    return np.zeros_like(x, dtype=float)


@dataclass(frozen=True)
class PotentialSampler:
    """Samples ``V(t, x)`` and ``A1(t, x)`` (and their time derivatives) at nodes.

    ``V`` and ``A1`` take ``(t, x)`` with ``x`` an array of nodes.  For
    time-dependent potentials the analytic derivatives ``dV``/``dA1`` must be
    supplied; there is no finite-difference fallback here.
    """

    V: ScalarFn = _zero
    A1: ScalarFn = _zero
    dV: ScalarFn | None = None
    dA1: ScalarFn | None = None
    time_independent: bool = True

    def __post_init__(self):
        if not self.time_independent and (self.dV is None or self.dA1 is None):
            raise ValueError("time-dependent potentials need analytic dV and dA1")

    def __call__(self, t: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _as_nodal(self.V(t, x), x), _as_nodal(self.A1(t, x), x)

    def dt(self, t: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.time_independent:
            z = np.zeros_like(x, dtype=float)
            return z, z
        return _as_nodal(self.dV(t, x), x), _as_nodal(self.dA1(t, x), x)

    @property
    def is_free(self) -> bool:
        return self.V is _zero and self.A1 is _zero


def _as_nodal(v, x) -> np.ndarray:
    return np.broadcast_to(np.asarray(v, dtype=float), x.shape)


FREE = PotentialSampler()


def nm_potential() -> PotentialSampler:
    """The smooth, time-independent benchmark potentials.

    ``A1 = (x+1)^2 / (1+x^2)`` and ``V = (1-x) / (1+x^2)``.
    """
    return PotentialSampler(
        V=lambda t, x: (1.0 - x) / (1.0 + x * x),
        A1=lambda t, x: (x + 1.0) ** 2 / (1.0 + x * x),
    )


def nm_initial(grid: Grid) -> SpinorField:
    """Gaussian initial data ``(exp(-x^2/2), exp(-(x-1)^2/2))``."""
    return SpinorField.from_functions(
        grid,
        lambda x: np.exp(-x * x / 2.0),
        lambda x: np.exp(-((x - 1.0) ** 2) / 2.0),
    )
