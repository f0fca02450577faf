"""Transport-free operations shared by the HTTP routes and the local CLI.

Each handler takes a validated request and returns a response model.
:class:`ConfigError` propagates so callers can map it to their own channel.
"""
from __future__ import annotations

from typing import Optional

from ..errors import NumericalFailure
from ..harness.config import RunConfig, cache_root
from ..harness.limit_study import run_limit_study
from ..harness.reference import check_reference_config, make_reference, snapshot_path
from ..harness.sweep import exit_code, run_sweep
from ..harness.validate import run_validation
from .schemas import (
    EXIT_NAN,
    EXIT_OK,
    CellOut,
    CheckOut,
    LimitSeriesOut,
    LimitStudyResponse,
    MakeRefResponse,
    SnapshotOut,
    SweepRequest,
    SweepResponse,
    ValidateResponse,
)


def sweep(req: SweepRequest) -> SweepResponse:
    config = req.config
    check_reference_config(config)
    report = run_sweep(config, threads=req.threads)
    cells = [CellOut(**{k: v for k, v in vars(c).items() if k != "M"}, order=report.order(c)) for c in report.cells]
    return SweepResponse(exit_code=exit_code(report), csv=report.csv_text(), cells=cells, header=report.header)


def limit_study(config: RunConfig, threads: Optional[int] = None) -> LimitStudyResponse:
    try:
        study = run_limit_study(config, threads=threads)
    except (NumericalFailure, FloatingPointError) as exc:
        return LimitStudyResponse(exit_code=EXIT_NAN, message=str(exc))
    series = [
        LimitSeriesOut(
            epsilon=s.epsilon,
            t=s.t.tolist(),
            E_sch=s.E_sch.tolist(),
            E_pau=s.E_pau.tolist(),
            boundary_mass=s.boundary_mass,
        )
        for s in study.series
    ]
    msg = "" if study.boundary_ok else "solution reaches the outer 10% of the domain; enlarge it"
    return LimitStudyResponse(
        exit_code=EXIT_OK, csv=study.csv_text(), series=series, boundary_ok=study.boundary_ok, message=msg
    )


def make_ref(config: RunConfig) -> MakeRefResponse:
    root = cache_root()
    out = []
    for eps in config.epsilons:
        try:
            snaps = make_reference(config, eps, root=root)
        except (NumericalFailure, FloatingPointError):
            return MakeRefResponse(exit_code=EXIT_NAN, snapshots=out)
        for t, s in snaps.items():
            out.append(SnapshotOut(epsilon=eps, t=t, path=str(snapshot_path(config, eps, t, root)), meta=s.meta))
    return MakeRefResponse(exit_code=EXIT_OK, snapshots=out)


def validate() -> ValidateResponse:
    checks = run_validation()
    code = EXIT_OK if all(c.passed for c in checks) else EXIT_NAN
    return ValidateResponse(
        exit_code=code, checks=[CheckOut(name=c.name, passed=c.passed, value=c.value, tol=c.tol) for c in checks]
    )
