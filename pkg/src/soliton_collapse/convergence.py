"""Step-refinement studies: errors against a reference run and observed orders."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, SimConfig, StopReason, make_grid
from .integrator import run


@dataclass(frozen=True)
class Probe:
    """A radius at which the field is compared.

    ``node_offset`` shifts the sampled node relative to ``r``; an offset of
    -1 reads the node one cell inside ``r``.
    """

    r: float
    label: str
    node_offset: int = 0


@dataclass
class ConvergenceRow:
    step: float
    h: float
    values: dict
    errors: dict
    quotients: dict | None
    stop_reason: StopReason


@dataclass
class ConvergenceTable:
    varied: str
    reference_step: float
    reference_values: dict
    probes: list
    rows: list = field(default_factory=list)

    def column(self, kind: str, label: str) -> np.ndarray:
        """``kind`` is 'values', 'errors' or 'quotients'."""
        out = []
        for row in self.rows:
            data = getattr(row, kind)
            out.append(math.nan if data is None else data[label])
        return np.array(out)


def _probe_node(config: SimConfig, probe: Probe) -> int:
    q = config.grid.index_of(probe.r) + probe.node_offset
    if not 0 <= q < config.grid.node_count:
        raise ConfigError(f"probe {probe.label} falls outside the grid")
    return q


def probe_values(config: SimConfig, probes, t_probe: float, lag_steps: int = 0):
    """Run ``config`` to ``round(t_probe/dt) - lag_steps`` steps and sample the probes."""
    n_steps = int(round(t_probe / config.dt)) - lag_steps
    if n_steps < 0:
        raise ConfigError("lag exceeds the number of steps")
    cfg = dataclasses.replace(config, t_end=n_steps * config.dt, snapshot_times=())
    nodes = [_probe_node(cfg, p) for p in probes]
    result = run(cfg)
    f = result.final_state.f_curr
    if result.stop_reason is not StopReason.REACHED_T_END:
        values = {p.label: math.nan for p in probes}
    else:
        values = {p.label: float(f[q]) for p, q in zip(probes, nodes)}
    return values, result.stop_reason


def _quotient(e_a, e_b, h_a, h_b):
    with np.errstate(divide="ignore", invalid="ignore"):
        if e_a <= 0 or e_b <= 0 or h_a <= 0 or h_b <= 0 or h_a == h_b:
            return math.nan
        return math.log(e_a / e_b) / math.log(h_a / h_b)


def _build(varied, steps, reference_step, make_config, probes, t_probe, lag_steps, cache):
    cache = {} if cache is None else cache

    def values_for(cfg):
        key = (cfg, t_probe, lag_steps, tuple(probes))
        if key not in cache:
            cache[key] = probe_values(cfg, probes, t_probe, lag_steps)
        return cache[key]

    ref_values, ref_reason = values_for(make_config(reference_step))
    if ref_reason is not StopReason.REACHED_T_END:
        raise RuntimeError(f"reference run ended early: {ref_reason.value}")
    table = ConvergenceTable(varied, reference_step, ref_values, list(probes))
    previous = None
    for step in steps:
        vals, reason = values_for(make_config(step))
        h = step - reference_step
        errors = {p.label: abs(vals[p.label] - ref_values[p.label]) for p in probes}
        quotients = None
        if previous is not None:
            quotients = {
                p.label: _quotient(previous.errors[p.label], errors[p.label], previous.h, h) for p in probes
            }
        row = ConvergenceRow(step, h, vals, errors, quotients, reason)
        table.rows.append(row)
        previous = row
    return table


def refine_time(base: SimConfig, dt_values, reference_dt, probes, t_probe, lag_steps=0, cache=None):
    """Vary ``dt`` with the grid fixed; ``h = dt - reference_dt``."""
    return _build(
        "dt",
        [float(v) for v in dt_values],
        float(reference_dt),
        lambda dt: dataclasses.replace(base, dt=dt),
        probes,
        t_probe,
        lag_steps,
        cache,
    )


def refine_space(base: SimConfig, dr_values, reference_dr, probes, t_probe, lag_steps=0, cache=None):
    """Vary ``dr`` with ``dt`` and ``r_max`` fixed; ``h = dr - reference_dr``."""
    r_max = base.grid.r_max
    return _build(
        "dr",
        [float(v) for v in dr_values],
        float(reference_dr),
        lambda dr: dataclasses.replace(base, grid=make_grid(dr, r_max)),
        probes,
        t_probe,
        lag_steps,
        cache,
    )
