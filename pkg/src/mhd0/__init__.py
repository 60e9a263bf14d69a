"""Pseudo-spectral lab for 3D barotropic compressible MHD without resistivity."""

from .config import ConfigError, RunConfig, load_config, parse_config
from .dynamics import FluidState, StateDerivative, cfl_dt, equilibrium, rhs, step_rk4
from .fields import GridSpec
from .model import BlowUpError, GammaLaw, ModelError, ModelParams, NonMonotone

__all__ = [
    "BlowUpError", "ConfigError", "FluidState", "GammaLaw", "GridSpec", "ModelError", "ModelParams",
    "NonMonotone", "RunConfig", "StateDerivative", "cfl_dt", "equilibrium", "load_config",
    "parse_config", "rhs", "step_rk4",
]
