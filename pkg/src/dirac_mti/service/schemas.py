"""Request and response bodies of the HTTP service."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel

from ..harness.config import RunConfig

# exit codes shared by the CLI and the service responses
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NAN = 2
EXIT_GATE = 3


class SweepRequest(BaseModel):
    config: RunConfig
    threads: Optional[int] = None


class CellOut(BaseModel):
    epsilon: float
    h: float
    tau: float
    T: float
    error: Optional[float]
    order: Optional[float]
    status: str
    floor: float
    detail: str = ""


class SweepResponse(BaseModel):
    exit_code: int
    csv: str
    cells: list[CellOut]
    header: dict


class LimitSeriesOut(BaseModel):
    epsilon: float
    t: list[float]
    E_sch: list[float]
    E_pau: list[float]
    boundary_mass: float


class LimitStudyResponse(BaseModel):
    exit_code: int
    csv: str = ""
    series: list[LimitSeriesOut] = []
    boundary_ok: bool = True
    message: str = ""


class SnapshotOut(BaseModel):
    epsilon: float
    t: float
    path: str
    meta: dict


class MakeRefResponse(BaseModel):
    exit_code: int
    snapshots: list[SnapshotOut]


class CheckOut(BaseModel):
    name: str
    passed: bool
    value: float
    tol: float


class ValidateResponse(BaseModel):
    exit_code: int
    checks: list[CheckOut]


class ErrorOut(BaseModel):
    exit_code: int
    detail: str
