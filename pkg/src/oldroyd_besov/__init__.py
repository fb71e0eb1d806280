"""Spectral toolkit and energy audits for the compressible Oldroyd-B system on a torus."""

from .energy import EnergyConstants, derive_constants, verify_coefficient_inequalities
from .errors import OldroydError
from .integrator import LinearModeOperator, StepConfig, run
from .model import ModelParams, State
from .spectral import Grid, SpectralField

__version__ = "0.1.0"

__all__ = [
    "EnergyConstants",
    "Grid",
    "LinearModeOperator",
    "ModelParams",
    "OldroydError",
    "SpectralField",
    "State",
    "StepConfig",
    "derive_constants",
    "run",
    "verify_coefficient_inequalities",
]
