"""Simulation and analysis of shrinking solitons in radial nonlinear wave equations."""

from .core import (
    ConfigError,
    FieldState,
    InitialProfile,
    ModelKind,
    OuterBcKind,
    ProfileKind,
    RadialGrid,
    SimConfig,
    SimulationResult,
    StopReason,
    init_state,
    make_grid,
)
from .integrator import run, step

__all__ = [
    "ConfigError",
    "FieldState",
    "InitialProfile",
    "ModelKind",
    "OuterBcKind",
    "ProfileKind",
    "RadialGrid",
    "SimConfig",
    "SimulationResult",
    "StopReason",
    "init_state",
    "make_grid",
    "run",
    "step",
]
