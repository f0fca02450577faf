"""Multiscale time integrator Fourier pseudospectral solver for the 1D Dirac
equation in the nonrelativistic limit regime, with a TSFP reference
integrator, limiting-model solvers and an experiment harness."""
from .errors import ConfigError, NumericalFailure, ReferenceGateError
from .mti import MtiState, evolve, mti_step, step_coefficients
from .potentials import FREE, PotentialSampler, nm_initial, nm_potential
from .spectral import Grid, SpinorField, make_grid, mass, mode_table
from .tsfp import tsfp_evolve, tsfp_step

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NumericalFailure",
    "ReferenceGateError",
    "MtiState",
    "evolve",
    "mti_step",
    "step_coefficients",
    "FREE",
    "PotentialSampler",
    "nm_initial",
    "nm_potential",
    "Grid",
    "SpinorField",
    "make_grid",
    "mass",
    "mode_table",
    "tsfp_evolve",
    "tsfp_step",
]
