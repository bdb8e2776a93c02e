"""Shared value types: radial grids, run configuration, field states and results."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class ModelKind(str, enum.Enum):
    """The three radial wave equations the toolkit can evolve."""

    YM41 = "YM41"
    CP1Q1 = "CP1Q1"
    CP1Q2 = "CP1Q2"


class ProfileKind(str, enum.Enum):
    FLAT = "Flat"
    PARABOLIC = "Parabolic"


class OuterBcKind(str, enum.Enum):
    FLAT = "Flat"
    PARABOLIC_SLOPE = "ParabolicSlope"


class StopReason(str, enum.Enum):
    REACHED_T_END = "ReachedTEnd"
    ORIGIN_BELOW_THRESHOLD = "OriginBelowThreshold"
    NON_FINITE = "NonFinite"


class ConfigError(ValueError):
    """Raised when a grid, profile or run configuration is invalid."""


class TimeStepWarning(RuntimeWarning):
    """Issued when dt exceeds the advisory bound dr**1.5 / 150."""


def _finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ConfigError(f"{name} must be finite and positive, got {value!r}")
    return value


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid with nodes at ``r = q * dr`` for ``q = 0 .. node_count - 1``."""

    dr: float
    node_count: int

    def __post_init__(self):
        _finite_positive("dr", self.dr)
        if self.node_count < 4:
            raise ConfigError("a grid needs at least 4 nodes")

    @property
    def r_max(self) -> float:
        return (self.node_count - 1) * self.dr

    @property
    def radii(self) -> np.ndarray:
        # q * dr for every node, never accumulated
        return np.arange(self.node_count) * self.dr

    def index_of(self, r: float, tol: float = 1e-9) -> int:
        """Node index whose radius equals ``r``; raises if ``r`` is off-grid."""
        q = int(round(r / self.dr))
        if abs(q * self.dr - r) > tol * max(1.0, abs(r)) or not 0 <= q < self.node_count:
            raise ConfigError(f"radius {r} is not a node of a grid with dr={self.dr}")
        return q


def make_grid(dr: float, r_max: float) -> RadialGrid:
    """Build a grid of spacing ``dr`` reaching ``r_max`` (rounded to a whole number of cells)."""
    dr = _finite_positive("dr", dr)
    r_max = _finite_positive("r_max", r_max)
    # the rounded node count (not r_max itself) must leave room for both boundary rules
    return RadialGrid(dr=dr, node_count=int(round(r_max / dr)) + 1)


@dataclass(frozen=True)
class InitialProfile:
    """Initial height profile ``f(r, 0) = p * r**2 + f0`` (``p = 0`` for a flat start)."""

    f0: float
    kind: ProfileKind = ProfileKind.FLAT
    p: float = 0.0

    def __post_init__(self):
        _finite_positive("f0", self.f0)
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if not math.isfinite(self.p):
            raise ConfigError("profile curvature must be finite")

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        if self.kind is ProfileKind.FLAT:
            return np.full(np.shape(r), self.f0, dtype=float)
        return self.p * np.asarray(r, dtype=float) ** 2 + self.f0


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulation run."""

    model: ModelKind
    grid: RadialGrid
    dt: float
    v0: float
    profile: InitialProfile
    t_end: float
    outer_bc: OuterBcKind = OuterBcKind.FLAT
    corrector_iterations: int = 6
    stop_fraction: float = 1e-3
    snapshot_times: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "model", ModelKind(self.model))
        object.__setattr__(self, "outer_bc", OuterBcKind(self.outer_bc))
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        _finite_positive("dt", self.dt)
        if not math.isfinite(self.v0):
            raise ConfigError("v0 must be finite")
        if not math.isfinite(self.t_end) or self.t_end < 0:
            raise ConfigError("t_end must be finite and non-negative")
        if int(self.corrector_iterations) < 1:
            raise ConfigError("corrector_iterations must be at least 1")
        if not 0.0 < self.stop_fraction < 1.0:
            raise ConfigError("stop_fraction must lie strictly between 0 and 1")
        if self.dt > self.grid.dr ** 1.5 / 150:
            warnings.warn(
                f"dt={self.dt} exceeds dr**1.5/150={self.grid.dr ** 1.5 / 150:.3g}; "
                "the scheme may be unstable",
                TimeStepWarning,
                stacklevel=3,
            )

    @property
    def f0(self) -> float:
        return self.profile.f0

    @property
    def step_count(self) -> int:
        """Number of steps needed to reach ``t_end``."""
        return int(round(self.t_end / self.dt))


@dataclass
class FieldState:
    """Two stored time levels of the field; ``f_prev`` is the level one step before ``t``."""

    t: float
    f_curr: np.ndarray
    f_prev: np.ndarray
    steps_taken: int = 0

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.f_curr.copy(), self.f_prev.copy(), self.steps_taken)


def init_state(config: SimConfig) -> FieldState:
    f = config.profile.evaluate(config.grid.radii)
    return FieldState(t=0.0, f_curr=f, f_prev=f.copy(), steps_taken=0)


@dataclass
class SimulationResult:
    """Outputs of a run: the origin trace, requested snapshots and why the run ended."""

    times: np.ndarray
    origin: np.ndarray
    snapshots: list = field(default_factory=list)
    stop_reason: StopReason = StopReason.REACHED_T_END
    final_state: FieldState | None = None

    @property
    def origin_trace(self) -> list:
        return list(zip(self.times.tolist(), self.origin.tolist()))
