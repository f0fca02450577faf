"""HTTP front end: ``uvicorn dirac_mti.service.api:app``.

Numerical work runs in FastAPI's thread pool (sync routes), so a long sweep
does not block ``/health``.
"""
from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError
from ..harness.config import RunConfig
from . import handlers
from .schemas import (
    EXIT_CONFIG,
    ErrorOut,
    LimitStudyResponse,
    MakeRefResponse,
    SweepRequest,
    SweepResponse,
    ValidateResponse,
)

app = FastAPI(title="dirac-mti", version=__version__)


@app.exception_handler(ConfigError)
async def _config_error(request: Request, exc: ConfigError):
    return JSONResponse(status_code=400, content=ErrorOut(exit_code=EXIT_CONFIG, detail=str(exc)).model_dump())


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest):
    return handlers.sweep(req)


@app.post("/limit-study", response_model=LimitStudyResponse)
def limit_study(config: RunConfig, threads: Optional[int] = None):
    return handlers.limit_study(config, threads)


@app.post("/make-ref", response_model=MakeRefResponse)
def make_ref(config: RunConfig):
    return handlers.make_ref(config)


@app.get("/validate", response_model=ValidateResponse)
def validate():
    return handlers.validate()
