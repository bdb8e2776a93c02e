"""Iterated leapfrog time stepping with origin and outer boundary rules."""

from __future__ import annotations

import math

import numpy as np

from .core import (
    FieldState,
    OuterBcKind,
    SimConfig,
    SimulationResult,
    StopReason,
    init_state,
)
from .models import DegenerateDenominator, RhsEvaluator


def apply_origin_bc(samples: np.ndarray) -> None:
    """Set the origin sample from the even quadratic through nodes 1 and 2."""
    samples[0] = 4.0 / 3.0 * samples[1] - 1.0 / 3.0 * samples[2]


def apply_outer_bc(samples: np.ndarray, kind: OuterBcKind, grid) -> None:
    """Set the last sample from its neighbours.

    ``Flat`` copies the neighbour.  ``ParabolicSlope`` makes the backward
    slope at R equal the backward slope one node in, scaled by R/(R - dr),
    which is what a profile growing like r**2 would give.
    """
    kind = OuterBcKind(kind)
    if kind is OuterBcKind.FLAT:
        samples[-1] = samples[-2]
    else:
        r_max = grid.r_max
        samples[-1] = samples[-2] + (samples[-2] - samples[-3]) * r_max / (r_max - grid.dr)


class Stepper:
    """Advances a :class:`FieldState` for one configuration.

    Holds the precomputed stencil so repeated steps are cheap.
    """

    def __init__(self, config: SimConfig):
        self.config = config
        self.rhs = RhsEvaluator(config.model, config.grid)
        # max-norm change made by the final corrector pass, when tracking is on
        self.track_corrections = False
        self.last_correction = math.nan

    def _apply_bcs(self, samples):
        apply_origin_bc(samples)
        apply_outer_bc(samples, self.config.outer_bc, self.config.grid)

    def step(self, state: FieldState) -> FieldState:
        cfg = self.config
        dt = cfg.dt
        f = state.f_curr
        if state.steps_taken == 0:
            # ghost level so that the predictor is f + v0*dt and the centred
            # velocity of the uncorrected predictor is v0
            f_prev = f - cfg.v0 * dt
        else:
            f_prev = state.f_prev

        spatial = self.rhs.frozen(f)
        leap = 2.0 * f[1:-1] - f_prev[1:-1]
        dt2 = dt * dt
        inv_2dt = 1.0 / (2.0 * dt)
        f_next = 2.0 * f - f_prev
        passes = cfg.corrector_iterations
        for i in range(passes):
            fdot = (f_next[1:-1] - f_prev[1:-1]) * inv_2dt
            updated = np.empty_like(f_next)
            updated[1:-1] = leap + dt2 * spatial(fdot)
            self._apply_bcs(updated)
            if self.track_corrections and i == passes - 1:
                self.last_correction = float(np.max(np.abs(updated - f_next)))
            f_next = updated
        return FieldState(
            t=(state.steps_taken + 1) * dt,
            f_curr=f_next,
            f_prev=f,
            steps_taken=state.steps_taken + 1,
        )


def step(state: FieldState, config: SimConfig) -> FieldState:
    """Advance ``state`` by one time step of ``config.dt``."""
    return Stepper(config).step(state)


def _snapshot_steps(config: SimConfig, n_steps: int) -> dict:
    """Map step index -> requested times (nearest step, ties to the earlier one)."""
    wanted = {}
    for t in config.snapshot_times:
        k = math.ceil(t / config.dt - 0.5)
        k = min(max(k, 0), n_steps)
        wanted.setdefault(k, []).append(t)
    return wanted


def run(config: SimConfig, keep_final_state: bool = True) -> SimulationResult:
    """Step until ``t_end``, the collapse threshold, or a non-finite state."""
    n_steps = config.step_count
    stepper = Stepper(config)
    state = init_state(config)
    times = np.empty(n_steps + 1)
    origin = np.empty(n_steps + 1)
    times[0], origin[0] = 0.0, state.f_curr[0]
    wanted = _snapshot_steps(config, n_steps)
    snapshots = []

    def capture(k, st):
        if k in wanted:
            snapshots.append((k * config.dt, st.f_curr.copy()))

    capture(0, state)
    threshold = config.stop_fraction * config.f0
    reason = StopReason.REACHED_T_END
    last = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(1, n_steps + 1):
            try:
                state = stepper.step(state)
            except DegenerateDenominator:
                reason = StopReason.NON_FINITE
                break
            times[k] = k * config.dt
            origin[k] = state.f_curr[0]
            last = k
            if not np.all(np.isfinite(state.f_curr)):
                reason = StopReason.NON_FINITE
                break
            capture(k, state)
            if origin[k] <= threshold:
                reason = StopReason.ORIGIN_BELOW_THRESHOLD
                break
    return SimulationResult(
        times=times[: last + 1].copy(),
        origin=origin[: last + 1].copy(),
        snapshots=snapshots,
        stop_reason=reason,
        final_state=state if keep_final_state else None,
    )
