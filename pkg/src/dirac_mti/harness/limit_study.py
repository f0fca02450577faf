"""Time series of the limiting-model errors ``E_sch(t)`` and ``E_pau(t)``."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from ..limiting import ScalarField, e_pau, e_sch, pauli_evolve, pauli_initial, schrodinger_evolve
from ..mti import evolve
from ..observers import Recorder
from ..spectral import mode_table
from .config import RunConfig
from .sweep import _map, default_threads

LIMIT_COLUMNS = ("epsilon", "t", "E_sch", "E_pau")
BOUNDARY_FRACTION = 0.1
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class LimitSeries:
    epsilon: float
    t: np.ndarray
    E_sch: np.ndarray
    E_pau: np.ndarray
    boundary_mass: float  # largest mass seen in the outer 10% of the domain

    def at(self, t: float) -> tuple[float, float]:
        k = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[k] - t) > 1e-9 * max(1.0, t):
            raise KeyError(f"no sample at t={t}")
        return float(self.E_sch[k]), float(self.E_pau[k])


@dataclass
class LimitStudy:
    series: list[LimitSeries]
    header: dict = field(default_factory=dict)

    @property
    def boundary_ok(self) -> bool:
        return all(s.boundary_mass < BOUNDARY_TOL for s in self.series)

    def csv_text(self) -> str:
        lines = [f"# {k}: {v}" for k, v in self.header.items()]
        lines.append(",".join(LIMIT_COLUMNS))
        for s in self.series:
            for t, a, b in zip(s.t, s.E_sch, s.E_pau):
                lines.append(f"{s.epsilon:.10g},{t:.10g},{a:.6e},{b:.6e}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: os.PathLike, plot_data: bool = False) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "limit_study.csv"
        path.write_text(self.csv_text())
        if plot_data:
            for s in self.series:
                rows = np.column_stack((s.t, s.E_sch, s.E_pau))
                np.savetxt(out / f"limit_eps{s.epsilon:.6g}.dat", rows, fmt="%.10e", header="t E_sch E_pau")
        return path


def halving_ratios(values: dict[float, float]) -> list[float]:
    """``value(eps) / value(eps/2)`` for consecutive entries, largest eps first."""
    eps = sorted(values, reverse=True)
    return [values[a] / values[b] for a, b in zip(eps, eps[1:])]


def fit_linear_in_t(t, E) -> tuple[float, float, float]:
    """Non-negative least squares ``E ~ C3 + C4 t``; returns ``(C3, C4, rel. residual)``."""
    t, E = np.asarray(t, float), np.asarray(E, float)
    (c3, c4), _ = nnls(np.column_stack((np.ones_like(t), t)), E)
    resid = float(np.linalg.norm(E - c3 - c4 * t) / np.linalg.norm(E))
    return float(c3), float(c4), resid


def _boundary_mass(values: np.ndarray, h: float) -> float:
    M = values.shape[-1]
    k = max(1, int(round(BOUNDARY_FRACTION * M / 2)))
    edge = np.concatenate((values[..., :k], values[..., M - k :]), axis=-1)
    return float(h * np.sum(np.abs(edge) ** 2))


def _one_eps(args) -> LimitSeries:
    config_json, eps = args
    config = RunConfig.model_validate_json(config_json)
    grid = config.grid(config.M[0])
    tau, T, every = config.taus[0], config.T, config.observer_every
    sampler = config.sampler()
    phi0 = config.initial(grid)
    table = mode_table(grid, eps)

    dirac = Recorder(lambda s: s.field, every)
    evolve(phi0, sampler, eps, tau, T, [dirac], table=table)
    sch = Recorder(lambda s: s, every)
    schrodinger_evolve(ScalarField(grid, phi0.values[0]), ScalarField(grid, phi0.values[1]), sampler, tau, T, [sch])
    pau = Recorder(lambda s: s, every)
    pauli_evolve(pauli_initial(phi0, table), sampler, table, tau, T, [pau])

    t = np.asarray(dirac.times)
    es = np.array([e_sch(f, s.phi_e, s.phi_p, tt, eps) for f, s, tt in zip(dirac.values, sch.values, t)])
    ep = np.array([e_pau(f, s, tt, eps) for f, s, tt in zip(dirac.values, pau.values, t)])
    edge = max(_boundary_mass(f.values, grid.h) for f in dirac.values)
    return LimitSeries(float(eps), t, es, ep, edge)


def run_limit_study(config: RunConfig, threads: Optional[int] = None) -> LimitStudy:
    """Per ``eps``: MTI-FP, Schrodinger pair and Pauli pair with one ``tau`` and cadence.

    Uses the first entries of ``config.M`` and ``config.taus``.
    """
    threads = threads or config.threads or default_threads()
    cfg_json = config.model_dump_json()
    series = _map(_one_eps, [(cfg_json, e) for e in config.epsilons], threads)
    header = {
        "case": config.case_key(),
        "M": config.M[0],
        "tau": config.taus[0],
        "T": config.T,
        "observer_every": config.observer_every,
    }
    return LimitStudy(series, header)
