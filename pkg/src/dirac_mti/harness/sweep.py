"""Parameter sweeps over ``(eps, h, tau)`` and the error/order report."""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, NumericalFailure
from ..limiting import ScalarField, pauli_evolve, pauli_initial, schrodinger_evolve
from ..mti import evolve
from ..spectral import GridMismatchError, SpinorField, mode_table
from ..tsfp import tsfp_evolve
from .config import RunConfig, cache_root
from .reference import load_reference, make_reference

OK = "ok"
GATED = "reference-limited"
NAN = "nan"
FAILED = "failed"

CSV_COLUMNS = ("epsilon", "h", "tau", "T", "error", "order")


def l2_error(numeric: SpinorField, reference: SpinorField) -> float:
    """``sqrt(h sum_j |Phi_j - Phi_ref_j|^2)``; ``reference`` must already live on ``numeric.grid``."""
    if numeric.grid != reference.grid:
        raise GridMismatchError(f"grid mismatch: {numeric.grid} vs {reference.grid}")
    d = numeric.values - reference.values
    return float(np.sqrt(numeric.grid.h * np.sum(d.real**2 + d.imag**2)))


@dataclass(frozen=True)
class Cell:
    epsilon: float
    h: float
    tau: float
    T: float
    error: Optional[float]
    status: str = OK
    floor: float = 0.0
    M: int = 0
    detail: str = ""


def _same(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(abs(a), abs(b))


@dataclass
class ErrorReport:
    """Rows keyed by ``(eps, h, tau)`` with the raw error ``e_{h,tau}(T)``.

    Orders use adjacent-``tau`` pairs inside one ``(eps, h)`` row only:
    ``log2(e_{h,2tau} / e_{h,tau})``.
    """

    cells: list[Cell]
    header: dict = field(default_factory=dict)

    @classmethod
    def from_errors(cls, eps: Sequence[float], h: float, taus: Sequence[float], errors, T: float = 2.0) -> "ErrorReport":
        """Synthetic report; ``errors[i][k]`` belongs to ``eps[i]`` and ``taus[k]``."""
        errors = np.atleast_2d(np.asarray(errors, dtype=float))
        cells = [
            Cell(float(e), float(h), float(t), float(T), float(errors[i, k]))
            for i, e in enumerate(eps)
            for k, t in enumerate(taus)
        ]
        return cls(cells)

    def error(self, eps: float, h: float, tau: float) -> Optional[float]:
        for c in self.cells:
            if _same(c.epsilon, eps) and _same(c.h, h) and _same(c.tau, tau):
                return c.error if c.status == OK else None
        return None

    def order(self, cell: Cell) -> Optional[float]:
        if cell.status != OK or cell.error is None:
            return None
        coarse = self.error(cell.epsilon, cell.h, 2.0 * cell.tau)
        if coarse is None or coarse <= 0 or cell.error <= 0:
            return None
        return math.log2(coarse / cell.error)

    @property
    def gated(self) -> list[Cell]:
        return [c for c in self.cells if c.status == GATED]

    @property
    def failed(self) -> list[Cell]:
        return [c for c in self.cells if c.status not in (OK, GATED)]

    def csv_text(self) -> str:
        lines = [f"# {k}: {v}" for k, v in self.header.items()]
        lines.append(",".join(CSV_COLUMNS))
        for c in self.cells:
            o = self.order(c)
            err = f"{c.error:.6e}" if c.status == OK else ""
            lines.append(
                f"{c.epsilon:.10g},{c.h:.10g},{c.tau:.10g},{c.T:.10g},{err},{'' if o is None else f'{o:.2f}'}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "header": self.header,
            "cells": [{**asdict(c), "order": self.order(c)} for c in self.cells],
        }

    def write(self, out_dir: os.PathLike, stem: str = "report") -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{stem}.csv"
        path.write_text(self.csv_text())
        (out / f"{stem}.json").write_text(json.dumps(self.to_json(), indent=1))
        return path


@dataclass(frozen=True)
class OrderFit:
    orders: dict  # eps -> [(tau, order), ...] in decreasing tau
    slope: float  # least-squares slope of log(max_eps e) against log(tau)
    taus: list
    max_errors: list


def fit_order(report: ErrorReport, h: Optional[float] = None) -> OrderFit:
    """Per-``eps`` order sequences and the uniform log-log slope."""
    cells = [c for c in report.cells if c.status == OK and c.error is not None]
    if h is not None:
        cells = [c for c in cells if _same(c.h, h)]
    taus = sorted({c.tau for c in cells}, reverse=True)
    if len(taus) < 3:
        raise ValueError(f"need at least 3 tau values to fit an order, got {len(taus)}")
    orders = {}
    for eps in sorted({c.epsilon for c in cells}, reverse=True):
        row = sorted((c for c in cells if _same(c.epsilon, eps)), key=lambda c: -c.tau)
        orders[eps] = [(c.tau, o) for c in row if (o := report.order(c)) is not None]
    emax = [max(c.error for c in cells if _same(c.tau, t)) for t in taus]
    slope = float(np.polyfit(np.log(taus), np.log(emax), 1)[0])
    return OrderFit(orders, slope, taus, emax)


# ---------------------------------------------------------------------------
# cell execution
# ---------------------------------------------------------------------------


def _solve(config: RunConfig, eps: float, M: int, tau: float) -> SpinorField:
    grid = config.grid(M)
    sampler = config.sampler()
    phi0 = config.initial(grid)
    T = config.T
    if config.method == "mti":
        return evolve(phi0, sampler, eps, tau, T).field
    if config.method == "tsfp":
        return tsfp_evolve(phi0, sampler, eps, tau, T).field
    w = np.exp(-1j * T / eps**2)
    if config.method == "schrodinger":
        st = schrodinger_evolve(ScalarField(grid, phi0.values[0]), ScalarField(grid, phi0.values[1]), sampler, tau, T)
        return SpinorField(grid, np.stack((w * st.phi_e.values, np.conj(w) * st.phi_p.values)))
    table = mode_table(grid, eps)
    st = pauli_evolve(pauli_initial(phi0, table), sampler, table, tau, T)
    return SpinorField(grid, w * st.psi_e.values + np.conj(w) * st.psi_p.values)


def _cell_path(root: Path, config: RunConfig, eps: float, M: int, tau: float) -> Path:
    return root / "cells" / config.physics_hash() / f"eps{eps!r}_M{M}_tau{tau!r}.json"


def _run_cell(args) -> Cell:
    config_json, eps, M, tau, root, ref_failure = args
    config = RunConfig.model_validate_json(config_json)
    root = Path(root)
    grid = config.grid(M)
    path = _cell_path(root, config, eps, M, tau)
    ref = load_reference(config, eps, config.T, root)
    floor = ref.floor if ref is not None else 0.0
    base = dict(epsilon=eps, h=grid.h, tau=tau, T=config.T, M=M, floor=floor)
    if ref_failure is not None:
        status, detail = ref_failure
        return Cell(**base, error=None, status=status, detail=f"reference: {detail}")
    if path.exists():
        return Cell(**{**base, **json.loads(path.read_text())})
    if ref is None:
        return Cell(**base, error=None, status=FAILED, detail="reference missing")
    try:
        err = l2_error(_solve(config, eps, M, tau), ref.field.restrict(grid))
    except (NumericalFailure, FloatingPointError) as exc:
        return Cell(**base, error=None, status=NAN, detail=str(exc))
    except Exception as exc:  # recorded per cell, never aborts the sweep
        return Cell(**base, error=None, status=FAILED, detail=f"{type(exc).__name__}: {exc}")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    tmp.write_text(json.dumps({"error": err}))
    os.replace(tmp, path)
    return Cell(**base, error=err)


def _gate(cell: Cell) -> Cell:
    if cell.status == OK and cell.error is not None and cell.error < cell.floor:
        return Cell(**{**asdict(cell), "status": GATED, "detail": f"below reference floor {cell.floor:.2e}"})
    return cell


def _build_reference(args):
    config_json, eps, root = args
    config = RunConfig.model_validate_json(config_json)
    try:
        make_reference(config, eps, root=root)
    except ConfigError:
        raise
    except (NumericalFailure, FloatingPointError) as exc:
        return NAN, str(exc)
    except Exception as exc:
        return FAILED, f"{type(exc).__name__}: {exc}"
    return None


def default_threads() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def report_header(config: RunConfig) -> dict:
    return {
        "method": config.method,
        "case": config.case_key(),
        "T": config.T,
        "reference": f"TSFP h_e={config.reference.h_e} tau_e={config.reference.tau_e}",
        "desk-scale defaults": "T=2, tau_e=1e-6 (errors below 10x the reference self-convergence estimate are withheld)",
    }


def run_sweep(config: RunConfig, threads: Optional[int] = None, root: Optional[os.PathLike] = None) -> ErrorReport:
    """Execute every ``(eps, M, tau)`` cell; results merge by key, not completion order."""
    threads = threads or config.threads or default_threads()
    root = Path(root) if root is not None else cache_root()
    cfg_json = config.model_dump_json()
    ref_failures = _map(_build_reference, [(cfg_json, e, str(root)) for e in config.epsilons], threads)
    failure = dict(zip(config.epsilons, ref_failures))
    jobs = [(cfg_json, e, M, t, str(root), failure[e]) for e in config.epsilons for M in config.M for t in config.taus]
    cells = [_gate(c) for c in _map(_run_cell, jobs, threads)]
    return ErrorReport(cells, report_header(config))


def exit_code(report: ErrorReport) -> int:
    # a failed cell cannot be told apart from a numerical blow-up downstream
    if report.failed:
        return 2
    if report.gated:
        return 3
    return 0
