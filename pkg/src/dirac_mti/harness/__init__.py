"""Experiment driver: configs, references, sweeps and limit studies."""
from .config import ExpressionCase, ReferenceSpec, RunConfig, cache_root, load_config
from .limit_study import LimitStudy, fit_linear_in_t, halving_ratios, run_limit_study
from .reference import load_reference, make_reference, read_snapshot, write_snapshot
from .sweep import ErrorReport, fit_order, l2_error, run_sweep

__all__ = [
    "ExpressionCase",
    "ReferenceSpec",
    "RunConfig",
    "cache_root",
    "load_config",
    "LimitStudy",
    "fit_linear_in_t",
    "halving_ratios",
    "run_limit_study",
    "load_reference",
    "make_reference",
    "read_snapshot",
    "write_snapshot",
    "ErrorReport",
    "fit_order",
    "l2_error",
    "run_sweep",
]
