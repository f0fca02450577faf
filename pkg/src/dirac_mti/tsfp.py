"""Strang time-splitting Fourier pseudospectral (TSFP) integrator.

Each step is ``P(tau/2) K(tau) P(tau/2)``.  The potential substep is the exact
pointwise exponential

    e^{-isW_j} = e^{-isV_j} (cos(s A1_j) I + i sin(s A1_j) sigma_1),

and the kinetic substep multiplies mode ``l`` by
``K_l(s) = e^{-is delta_l/eps^2} Pi_l^+ + e^{is delta_l/eps^2} Pi_l^-``.
Both substeps are unitary, so the discrete mass is conserved to roundoff.
For time-independent potentials consecutive half steps are merged.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from . import _kernels
from .errors import NumericalFailure
from .mti import MtiState, step_schedule
from .observers import due, next_due
from .potentials import PotentialSampler
from .spectral import Grid, ModeTable, SpinorField, mode_table

__all__ = [
    "TsfpPropagators",
    "tsfp_propagators",
    "potential_exponential",
    "tsfp_step",
    "tsfp_evolve",
]


@dataclass(frozen=True, eq=False)
class TsfpPropagators:
    """Kinetic matrices ``K_l(tau)`` (symmetric; entries ``k11, k12, k22``)."""

    table: ModeTable
    tau: float
    k11: np.ndarray
    k12: np.ndarray
    k22: np.ndarray

    @property
    def grid(self) -> Grid:
        return self.table.grid

    @property
    def eps(self) -> float:
        return self.table.eps

    def matrix(self, l: int) -> np.ndarray:
        k = self.grid.index(l)
        return np.array([[self.k11[k], self.k12[k]], [self.k12[k], self.k22[k]]])


def _kinetic(table: ModeTable, s: float):
    a = np.exp(-1j * s * table.delta / table.eps**2)
    ac = np.conj(a)
    p11, p12, p22 = table.pi_plus
    m11, _, m22 = table.pi_minus
    return a * p11 + ac * m11, (a - ac) * p12, a * p22 + ac * m22


_prop_cache: dict = {}
_prop_lock = threading.Lock()


def tsfp_propagators(table: ModeTable, tau: float) -> TsfpPropagators:
    """Kinetic propagators for ``tau``, cached per ``(tau, eps, grid)``."""
    key = (float(tau), table.eps, table.grid)
    with _prop_lock:
        hit = _prop_cache.get(key)
    if hit is not None:
        return hit
    k11, k12, k22 = _kinetic(table, tau)
    for arr in (k11, k12, k22):
        arr.setflags(write=False)
    props = TsfpPropagators(table, float(tau), k11, k12, k22)
    with _prop_lock:
        if len(_prop_cache) > 64:
            _prop_cache.clear()
        _prop_cache[key] = props
    return props


def potential_exponential(V, A1, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal entries of ``e^{-isW}`` at every node."""
    pv = np.exp(-1j * s * np.asarray(V, dtype=float))
    sa = s * np.asarray(A1, dtype=float)
    return pv * np.cos(sa), 1j * pv * np.sin(sa)


def _kinetic_step(u: np.ndarray, props: TsfpPropagators) -> np.ndarray:
    c = sfft.fft(u, axis=-1)
    _kernels.mix_into(c, props.k11, props.k12, props.k12, props.k22, c)
    return sfft.ifft(c, axis=-1, overwrite_x=True)


def _potential_step(u, sampler: PotentialSampler, t_mid: float, s: float, x) -> np.ndarray:
    d, o = potential_exponential(*sampler(t_mid, x), s)
    out = np.empty_like(u)
    _kernels.sym_mix_into(u, d, o, out)
    return out


def tsfp_step(state: MtiState, sampler: PotentialSampler, props: TsfpPropagators, tau: float) -> MtiState:
    """One Strang step ``P(tau/2) K(tau) P(tau/2)``; potentials sampled at substep midpoints."""
    if state.field.grid != props.grid:
        raise ValueError("state and propagators live on different grids")
    if abs(props.tau - tau) > 1e-15 * max(1.0, tau):
        raise ValueError(f"propagators built for tau={props.tau}, step requested {tau}")
    x = props.grid.nodes
    t = state.t
    u = _potential_step(state.field.values, sampler, t + 0.25 * tau, 0.5 * tau, x)
    u = _kinetic_step(u, props)
    u = _potential_step(u, sampler, t + 0.75 * tau, 0.5 * tau, x)
    if not np.all(np.isfinite(u)):
        raise NumericalFailure(f"non-finite values after TSFP step at t={t}")
    return MtiState(SpinorField(props.grid, u), t + tau, state.step_index + 1)


def tsfp_evolve(
    initial: SpinorField,
    sampler: PotentialSampler,
    eps: float,
    tau: float,
    T: float,
    observers: Sequence = (),
    t0: float = 0.0,
) -> MtiState:
    """Integrate with TSFP from ``t0`` to ``t0 + T``.

    Observers follow the same cadence contract as :func:`dirac_mti.mti.evolve`.
    """
    grid = initial.grid
    table = mode_table(grid, eps)
    n_full, last = step_schedule(T, tau)
    n_total = n_full + (last is not None)

    state = MtiState(initial, t0, 0)
    for obs in due(observers, 0, n_total == 0):
        obs(state)
    if n_total == 0:
        return state
    if not sampler.time_independent:
        return _evolve_stepwise(initial, sampler, table, tau, n_full, last, observers, t0, T)

    props = tsfp_propagators(table, tau)
    x = grid.nodes
    V, A1 = sampler(t0, x)
    half_d, half_o = potential_exponential(V, A1, 0.5 * tau)
    full_d, full_o = potential_exponential(V, A1, tau)

    # u holds P(tau/2) applied to the state, so steps merge into K then P(tau)
    u = np.empty((2, grid.M), dtype=complex)
    _kernels.sym_mix_into(np.ascontiguousarray(initial.values), half_d, half_o, u)
    out = np.empty_like(u)
    k11, k12, k22 = props.k11, props.k12, props.k22
    mix_into, sym_mix_into = _kernels.mix_into, _kernels.sym_mix_into
    fft, ifft = sfft.fft, sfft.ifft
    upcoming = next_due(observers, 0)
    check = 4096
    for n in range(n_full):
        c = fft(u, axis=-1, overwrite_x=True)
        mix_into(c, k11, k12, k12, k22, c)
        v = ifft(c, axis=-1, overwrite_x=True)
        step = n + 1
        final = step == n_total
        if final or step == upcoming or step == check:
            hits = due(observers, step, final) if (final or step == upcoming) else []
            if step == upcoming:
                upcoming = next_due(observers, step)
            if step == check:
                check += 4096
            sym_mix_into(v, half_d, half_o, out)
            if not np.all(np.isfinite(out)):
                raise NumericalFailure(f"non-finite values after TSFP step {step}")
            if hits or final:
                t = t0 + T if final else t0 + step * tau
                state = MtiState(SpinorField(grid, out.copy()), t, step)
                for obs in hits:
                    obs(state)
        if not final:
            sym_mix_into(v, full_d, full_o, u)

    if last is not None:
        # u = P(tau/2) state; finish with P(last/2) K(last) P(last/2)
        _kernels.sym_mix_into(u, *potential_exponential(V, A1, 0.5 * (last - tau)), u)
        short = tsfp_propagators(table, last)
        v = _kinetic_step(u, short)
        _kernels.sym_mix_into(v, *potential_exponential(V, A1, 0.5 * last), out)
        if not np.all(np.isfinite(out)):
            raise NumericalFailure("non-finite values after final TSFP step")
        state = MtiState(SpinorField(grid, out.copy()), t0 + T, n_total)
        for obs in due(observers, n_total, True):
            obs(state)
    return state


def _evolve_stepwise(initial, sampler, table, tau, n_full, last, observers, t0, T):
    props = tsfp_propagators(table, tau)
    state = MtiState(initial, t0, 0)
    n_total = n_full + (last is not None)
    for n in range(n_total):
        if n == n_full:
            props = tsfp_propagators(table, last)
        state = tsfp_step(state, sampler, props, props.tau)
        state = MtiState(state.field, t0 + T if n + 1 == n_total else t0 + (n + 1) * tau, n + 1)
        for obs in due(observers, n + 1, n + 1 == n_total):
            obs(state)
    return state
