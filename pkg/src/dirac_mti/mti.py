"""Multiscale time integrator Fourier pseudospectral (MTI-FP) method.

On every step ``[t_n, t_n + tau]`` the solution is written as

    Phi(t_n + s) = e^{-is/eps^2} (Psi_+^1 + Psi_-^1) + e^{is/eps^2} (Psi_+^2 + Psi_-^2)

with ``Psi_+^1 = Pi_+ Phi^n`` and ``Psi_-^2 = Pi_- Phi^n`` at ``s = 0`` and the
other two components starting from zero.  Each component is advanced with a
Gautschi-type exponential quadrature in Fourier space.  The small components
``Psi_-^1`` and ``Psi_+^2`` are updated first; their end values feed the
derivative terms of the large components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalFailure
from .observers import due
from .potentials import PotentialSampler
from .spectral import Grid, ModeTable, SpinorField, fwd, inv, mix, mode_table, project

__all__ = [
    "StepCoefficients",
    "MtiState",
    "gautschi_weights",
    "step_coefficients",
    "mti_step",
    "evolve",
    "step_schedule",
    "free_propagator",
]

_SERIES_CUT = 1.0
_SERIES_TERMS = 24


def gautschi_weights(theta: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights ``p = -i int_0^tau e^{-i theta (tau-w)} dw`` and ``q`` (same with ``w``).

    Closed forms are ``p = -i tau e^{-iz/2} sinc(z/2)`` and
    ``q = -(tau/theta) (1 - e^{-iz/2} sinc(z/2))`` with ``z = theta tau``.
    For ``|z| < 1`` both are summed from their Taylor series, which is exact
    at ``z = 0`` (``p = -i tau``, ``q = -i tau^2 / 2``) and free of the
    ``1/theta`` cancellation.
    """
    theta = np.asarray(theta, dtype=float)
    z = theta * tau
    p = np.empty(z.shape, dtype=complex)
    q = np.empty(z.shape, dtype=complex)

    small = np.abs(z) < _SERIES_CUT
    if np.any(small):
        w = -1j * z[small]
        # phi_1(w) = sum w^n/(n+1)!, phi_2(w) = sum w^n/(n+2)!
        phi1 = np.zeros(w.shape, dtype=complex)
        phi2 = np.zeros(w.shape, dtype=complex)
        for n in range(_SERIES_TERMS, -1, -1):
            phi1 = phi1 * w + 1.0 / math.factorial(n + 1)
            phi2 = phi2 * w + 1.0 / math.factorial(n + 2)
        p[small] = -1j * tau * phi1
        q[small] = -1j * tau * tau * phi2

    big = ~small
    if np.any(big):
        zb = z[big]
        half = 0.5 * zb
        esinc = np.exp(-1j * half) * (np.sin(half) / half)
        p[big] = -1j * tau * esinc
        q[big] = -(tau / theta[big]) * (1.0 - esinc)
    return p, q


@dataclass(frozen=True, eq=False)
class StepCoefficients:
    """Per-mode quadrature weights and phases for one step size ``tau``."""

    grid: Grid
    eps: float
    tau: float
    p_minus: np.ndarray
    q_minus: np.ndarray
    p_plus: np.ndarray
    q_plus: np.ndarray
    phase_minus: np.ndarray  # e^{-i delta_l^- tau / eps^2}
    outer_phase: complex  # e^{-i tau / eps^2}
    filter: np.ndarray  # 2 sin(mu_l^2 tau / 2) / (delta_l^+ tau)


def step_coefficients(table: ModeTable, tau: float) -> StepCoefficients:
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    eps2 = table.eps**2
    p_minus, q_minus = gautschi_weights(table.delta_minus / eps2, tau)
    p_plus, q_plus = gautschi_weights(table.delta_plus / eps2, tau)
    mu2 = table.mu**2
    return StepCoefficients(
        grid=table.grid,
        eps=table.eps,
        tau=float(tau),
        p_minus=p_minus,
        q_minus=q_minus,
        p_plus=p_plus,
        q_plus=q_plus,
        phase_minus=np.exp(-1j * tau * table.delta_minus / eps2),
        outer_phase=complex(np.exp(-1j * tau / eps2)),
        filter=2.0 * np.sin(0.5 * mu2 * tau) / (table.delta_plus * tau),
    )


@dataclass(frozen=True, eq=False)
class MtiState:
    field: SpinorField
    t: float
    step_index: int = 0


def _apply_W(V, A1, u):
    # W = V I - A1 sigma_1, pointwise
    return mix(V, -A1, -A1, V, u)


def _advance(c_phi, V, A1, dV, dA1, coeffs: StepCoefficients, table: ModeTable) -> np.ndarray:
    """One MTI-FP step on Fourier coefficients ``c_phi`` (shape ``(2, M)``).

    ``dV``/``dA1`` are ``None`` for time-independent potentials.
    """
    Pp, Pm = table.pi_plus, table.pi_minus
    tau = coeffs.tau
    filt = coeffs.filter

    big1 = project(Pp, c_phi)  # Psi_+^1 at s = 0
    big2 = project(Pm, c_phi)  # Psi_-^2 at s = 0
    psi = inv(np.stack((big1, big2)))
    F = fwd(_apply_W(V, A1, psi))
    f1p, f1m = project(Pp, F[0]), project(Pm, F[0])
    f2p, f2m = project(Pp, F[1]), project(Pm, F[1])

    # derivative proxies at s = 0; the large components carry the filter
    d1p = -1j * filt * big1 - 1j * f1p
    d1m = -1j * f1m
    d2p = -1j * f2p
    d2m = 1j * filt * big2 - 1j * f2m

    g = None if dV is None else _apply_W(dV, dA1, psi)

    # small components first
    S = _apply_W(V, A1, inv(np.stack((d1p + d1m, d2p + d2m))))
    if g is not None:
        S += g
    G = fwd(S)
    small1 = -np.conj(coeffs.p_plus) * f1m - np.conj(coeffs.q_plus) * project(Pm, G[0])
    small2 = coeffs.p_plus * f2p + coeffs.q_plus * project(Pp, G[1])

    # large components, with the small-component derivatives replaced by
    # end-point differences
    H = _apply_W(V, A1, inv(np.stack((d1p + small1 / tau, d2m + small2 / tau))))
    if g is not None:
        H += g
    H = fwd(H)
    large1 = coeffs.phase_minus * big1 + coeffs.p_minus * f1p + coeffs.q_minus * project(Pp, H[0])
    large2 = (
        np.conj(coeffs.phase_minus) * big2
        - np.conj(coeffs.p_minus) * f2m
        - np.conj(coeffs.q_minus) * project(Pm, H[1])
    )

    w = coeffs.outer_phase
    return w * (large1 + small1) + np.conj(w) * (small2 + large2)


def _check_compatible(field: SpinorField, coeffs: StepCoefficients, table: ModeTable) -> None:
    if field.grid != table.grid or coeffs.grid != table.grid:
        raise ValueError("state, coefficients and mode table must share one grid")
    if coeffs.eps != table.eps:
        raise ValueError("coefficients and mode table built for different eps")


def mti_step(
    state: MtiState,
    sampler: PotentialSampler,
    coeffs: StepCoefficients,
    table: ModeTable,
) -> MtiState:
    """Advance ``state`` by one step of size ``coeffs.tau``."""
    _check_compatible(state.field, coeffs, table)
    x = table.grid.nodes
    V, A1 = sampler(state.t, x)
    dV = dA1 = None
    if not sampler.time_independent:
        dV, dA1 = sampler.dt(state.t, x)
    c = _advance(fwd(state.field.values), V, A1, dV, dA1, coeffs, table)
    values = inv(c)
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"non-finite values after MTI-FP step at t={state.t}")
    return MtiState(SpinorField(table.grid, values), state.t + coeffs.tau, state.step_index + 1)


def step_schedule(T: float, tau: float, rtol: float = 1e-9) -> tuple[int, float | None]:
    """Number of full steps of size ``tau`` to reach ``T`` and the length of a
    shortened last step (``None`` when ``T`` is a multiple of ``tau``)."""
    if T < 0:
        raise ValueError(f"T must be non-negative, got {T}")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    ratio = T / tau
    n = round(ratio)
    if abs(ratio - n) <= rtol * max(1.0, ratio):
        return int(n), None
    n = math.floor(ratio)
    return n, T - n * tau


def evolve(
    initial: SpinorField,
    sampler: PotentialSampler,
    eps: float,
    tau: float,
    T: float,
    observers: Sequence = (),
    t0: float = 0.0,
    table: ModeTable | None = None,
) -> MtiState:
    """Integrate from ``t0`` to ``t0 + T`` with the MTI-FP method.

    A shortened final step is taken when ``T`` is not a multiple of ``tau``.
    Observers fire at step 0, every ``observer.every`` steps, and at the end.
    """
    grid = initial.grid
    table = table if table is not None else mode_table(grid, eps)
    if table.grid != grid or table.eps != eps:
        raise ValueError("mode table does not match grid/eps")
    n_full, last = step_schedule(T, tau)
    n_total = n_full + (last is not None)
    x = grid.nodes

    state = MtiState(initial, t0, 0)
    for obs in due(observers, 0, n_total == 0):
        obs(state)
    if n_total == 0:
        return state

    coeffs = step_coefficients(table, tau)
    static = sampler.time_independent
    if static:
        V, A1 = (np.array(v) for v in sampler(t0, x))
    dV = dA1 = None

    c = fwd(initial.values)
    for n in range(n_total):
        t_n = t0 + n * tau
        if n == n_full:
            coeffs = step_coefficients(table, last)
        if not static:
            V, A1 = sampler(t_n, x)
            dV, dA1 = sampler.dt(t_n, x)
        c = _advance(c, V, A1, dV, dA1, coeffs, table)
        step = n + 1
        final = step == n_total
        hits = due(observers, step, final)
        if hits or final:
            values = inv(c)
            if not np.all(np.isfinite(values)):
                raise NumericalFailure(f"non-finite values after MTI-FP step {step}")
            t = t0 + T if final else t0 + step * tau
            state = MtiState(SpinorField(grid, values), t, step)
            for obs in hits:
                obs(state)
        elif not np.isfinite(c[0, 0]) or (step % 64 == 0 and not np.all(np.isfinite(c))):
            raise NumericalFailure(f"non-finite values after MTI-FP step {step}")
    return state


def free_propagator(c: np.ndarray, table: ModeTable, s: float) -> np.ndarray:
    """Exact free evolution ``e^{-is T/eps^2}`` applied to coefficients ``c``."""
    ph = np.exp(-1j * s * table.delta / table.eps**2)
    return ph * project(table.pi_plus, c) + np.conj(ph) * project(table.pi_minus, c)
