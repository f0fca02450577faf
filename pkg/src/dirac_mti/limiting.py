"""Limiting models of the Dirac equation as ``eps -> 0`` and their error functionals.

* first order: a pair of Schrodinger equations
  ``i d_t phi_e = (-1/2 Laplacian + V) phi_e`` and
  ``i d_t phi_p = (+1/2 Laplacian + V) phi_p``, solved by Strang splitting;
* second order (Pauli type):
  ``i d_t Psi_e = (1/eps^2) D Psi_e + Pi_+ (W Psi_e)`` and
  ``i d_t Psi_p = -(1/eps^2) D Psi_p + Pi_- (W Psi_p)`` with
  ``D = sqrt(I - eps^2 Laplacian) - I``, solved by a Gautschi-type
  exponential wave integrator sharing the MTI-FP quadrature weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalFailure
from .mti import StepCoefficients, _apply_W, step_coefficients, step_schedule
from .observers import due
from .potentials import PotentialSampler
from .spectral import (
    Grid,
    GridMismatchError,
    ModeTable,
    SpinorField,
    apply_projector,
    forward_transform,
    fwd,
    inv,
    inverse_transform,
    project,
)

__all__ = [
    "ScalarField",
    "SchrodingerState",
    "PauliState",
    "schrodinger_evolve",
    "pauli_initial",
    "pauli_evolve",
    "e_sch",
    "e_pau",
]


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("scalar field has non-finite entries")
        object.__setattr__(self, "values", v)

    def mass(self) -> float:
        return float(self.grid.h * np.sum(np.abs(self.values) ** 2))


@dataclass(frozen=True, eq=False)
class SchrodingerState:
    phi_e: ScalarField
    phi_p: ScalarField
    t: float
    step_index: int = 0


@dataclass(frozen=True, eq=False)
class PauliState:
    psi_e: SpinorField
    psi_p: SpinorField
    t: float
    step_index: int = 0

    def __post_init__(self):
        if self.psi_e.grid != self.psi_p.grid:
            raise GridMismatchError("Psi_e and Psi_p must share one grid")


# ---------------------------------------------------------------------------
# Schrodinger pair
# ---------------------------------------------------------------------------


def schrodinger_evolve(
    phi_e0: ScalarField,
    phi_p0: ScalarField,
    sampler: PotentialSampler,
    tau: float,
    T: float,
    observers: Sequence = (),
    t0: float = 0.0,
) -> SchrodingerState:
    """Strang splitting ``V/2 - kinetic - V/2`` for both Schrodinger equations.

    Kinetic symbols are ``e^{-i s mu_l^2 / 2}`` for ``phi_e`` and
    ``e^{+i s mu_l^2 / 2}`` for ``phi_p``; only ``V`` enters.  Time-dependent
    ``V`` is sampled at substep midpoints.
    """
    grid = phi_e0.grid
    if phi_p0.grid != grid:
        raise GridMismatchError("phi_e and phi_p on different grids")
    x = grid.nodes
    mu2 = grid.mu**2
    n_full, last = step_schedule(T, tau)
    n_total = n_full + (last is not None)

    u = np.stack((phi_e0.values, phi_p0.values))
    state = SchrodingerState(phi_e0, phi_p0, t0, 0)
    for obs in due(observers, 0, n_total == 0):
        obs(state)

    def kinetic(s):
        k = np.exp(-0.5j * s * mu2)
        return np.stack((k, np.conj(k)))

    kin = kinetic(tau)
    for n in range(n_total):
        s = tau if n < n_full else last
        if n == n_full:
            kin = kinetic(s)
        t_n = t0 + n * tau
        V1 = sampler(t_n + 0.25 * s, x)[0]
        u = u * np.exp(-0.5j * s * V1)
        u = inv(kin * fwd(u))
        V2 = V1 if sampler.time_independent else sampler(t_n + 0.75 * s, x)[0]
        u = u * np.exp(-0.5j * s * V2)
        step = n + 1
        final = step == n_total
        hits = due(observers, step, final)
        if hits or final:
            if not np.all(np.isfinite(u)):
                raise NumericalFailure(f"non-finite values after Schrodinger step {step}")
            t = t0 + T if final else t0 + step * tau
            state = SchrodingerState(ScalarField(grid, u[0].copy()), ScalarField(grid, u[1].copy()), t, step)
            for obs in hits:
                obs(state)
    return state


# ---------------------------------------------------------------------------
# Pauli-type pair
# ---------------------------------------------------------------------------


def pauli_initial(phi0: SpinorField, table: ModeTable) -> PauliState:
    """``Psi_e(0) = Pi_+ Phi_0`` and ``Psi_p(0) = Pi_- Phi_0``."""
    c = forward_transform(phi0)
    return PauliState(
        inverse_transform(apply_projector(c, table, +1)),
        inverse_transform(apply_projector(c, table, -1)),
        0.0,
        0,
    )


def _pauli_advance(ce, cp, V, A1, dV, dA1, coeffs: StepCoefficients, table: ModeTable):
    Pp, Pm = table.pi_plus, table.pi_minus
    filt = coeffs.filter
    psi = inv(np.stack((ce, cp)))
    F = fwd(_apply_W(V, A1, psi))
    fe = project(Pp, F[0])
    fp = project(Pm, F[1])
    de = -1j * filt * ce - 1j * fe
    dp = 1j * filt * cp - 1j * fp
    S = _apply_W(V, A1, inv(np.stack((de, dp))))
    if dV is not None:
        S += _apply_W(dV, dA1, psi)
    G = fwd(S)
    ce_new = coeffs.phase_minus * ce + coeffs.p_minus * fe + coeffs.q_minus * project(Pp, G[0])
    cp_new = (
        np.conj(coeffs.phase_minus) * cp
        - np.conj(coeffs.p_minus) * fp
        - np.conj(coeffs.q_minus) * project(Pm, G[1])
    )
    return ce_new, cp_new


def pauli_evolve(
    initial: PauliState,
    sampler: PotentialSampler,
    table: ModeTable,
    tau: float,
    T: float,
    observers: Sequence = (),
) -> PauliState:
    """Gautschi-type EWI for the Pauli-type pair.

    The electron part carries the symbol ``delta_l^-/eps^2 = mu_l^2/(delta_l+1)``
    (bounded uniformly in ``eps``); the positron part the negated symbol.
    """
    grid = initial.psi_e.grid
    if grid != table.grid:
        raise GridMismatchError("state and mode table on different grids")
    x = grid.nodes
    t0 = initial.t
    n_full, last = step_schedule(T, tau)
    n_total = n_full + (last is not None)

    state = initial
    for obs in due(observers, 0, n_total == 0):
        obs(state)
    if n_total == 0:
        return state

    coeffs = step_coefficients(table, tau)
    dV = dA1 = None
    if sampler.time_independent:
        V, A1 = sampler(t0, x)
    ce, cp = fwd(initial.psi_e.values), fwd(initial.psi_p.values)
    for n in range(n_total):
        if n == n_full:
            coeffs = step_coefficients(table, last)
        if not sampler.time_independent:
            t_n = t0 + n * tau
            V, A1 = sampler(t_n, x)
            dV, dA1 = sampler.dt(t_n, x)
        ce, cp = _pauli_advance(ce, cp, V, A1, dV, dA1, coeffs, table)
        step = n + 1
        final = step == n_total
        hits = due(observers, step, final)
        if hits or final:
            ue, up = inv(ce), inv(cp)
            if not (np.all(np.isfinite(ue)) and np.all(np.isfinite(up))):
                raise NumericalFailure(f"non-finite values after Pauli step {step}")
            t = t0 + T if final else t0 + step * tau
            state = PauliState(SpinorField(grid, ue), SpinorField(grid, up), t, step)
            for obs in hits:
                obs(state)
    return state


# ---------------------------------------------------------------------------
# error functionals
# ---------------------------------------------------------------------------


def _l2(grid: Grid, diff: np.ndarray) -> float:
    return float(np.sqrt(grid.h * np.sum(np.abs(diff) ** 2)))


def e_sch(phi: SpinorField, phi_e: ScalarField, phi_p: ScalarField, t: float, eps: float) -> float:
    """``|| Phi - e^{-it/eps^2} phi_e e_1 - e^{it/eps^2} phi_p e_2 ||``."""
    g = phi.grid
    if phi_e.grid != g or phi_p.grid != g:
        raise GridMismatchError("E_sch operands on different grids")
    w = np.exp(-1j * t / eps**2)
    diff = phi.values - np.stack((w * phi_e.values, np.conj(w) * phi_p.values))
    return _l2(g, diff)


def e_pau(phi: SpinorField, state: PauliState, t: float, eps: float) -> float:
    """``|| Phi - e^{-it/eps^2} Psi_e - e^{it/eps^2} Psi_p ||``."""
    g = phi.grid
    if state.psi_e.grid != g:
        raise GridMismatchError("E_pau operands on different grids")
    w = np.exp(-1j * t / eps**2)
    diff = phi.values - w * state.psi_e.values - np.conj(w) * state.psi_p.values
    return _l2(g, diff)
