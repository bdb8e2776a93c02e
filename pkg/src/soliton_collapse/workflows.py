"""Analysis pipelines that turn simulation output into fitted collapse laws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convergence import Probe
from .core import ModelKind, SimulationResult, StopReason
from .fitting import (
    AfterFraction,
    BeforeBoundaryHit,
    FitError,
    LineFit,
    ParabolaFit,
    TimeRange,
    fit_ellipse,
    fit_hyperbola,
    fit_line,
    fit_parabola_vertex,
    select_fit_window,
)
from .predictions import extract_c_R


def origin_parabola(result: SimulationResult, window=AfterFraction(0.5)) -> ParabolaFit:
    t, f = select_fit_window(result.times, result.origin, window)
    return fit_parabola_vertex(t, f)


@dataclass(frozen=True)
class OriginLine:
    line: LineFit
    collapse_time: float


def origin_line(result: SimulationResult, window=None) -> OriginLine:
    """Line through the origin trace plus the time the run reached its collapse threshold.

    ``collapse_time`` is NaN when the run ended for another reason.
    """
    t, f = result.times, result.origin
    if window is not None:
        t, f = select_fit_window(t, f, window)
    collapsed = result.stop_reason is StopReason.ORIGIN_BELOW_THRESHOLD
    return OriginLine(fit_line(t, f), float(result.times[-1]) if collapsed else float("nan"))


def bump_points(r, f, height_fraction: float):
    """Nodes of a slice that rise above the far field by more than ``height_fraction`` of the peak.

    The far-field level is read one node inside the outer edge.  The origin
    node is always kept.
    """
    r = np.asarray(r)
    f = np.asarray(f)
    far = f[-2]
    keep = (f - far) > height_fraction * (f[0] - far)
    keep[0] = True
    return r[keep], f[keep]


@dataclass
class ConicSeries:
    kind: str
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    k: np.ndarray
    rms: np.ndarray
    skipped: list

    @property
    def slope(self) -> np.ndarray:
        """Asymptotic slope ``-b/a`` of each slice."""
        return -self.b / self.a


def conic_series(r, snapshots, kind: str = "ellipse", height_fraction: float | None = None) -> ConicSeries:
    """Fit an ellipse or hyperbola to the bump of each ``(t, samples)`` snapshot.

    Slices that cannot be fitted (too few points, wrong conic sign) are
    skipped and listed in ``skipped``.
    """
    if kind not in ("ellipse", "hyperbola"):
        raise ValueError("kind must be 'ellipse' or 'hyperbola'")
    if height_fraction is None:
        height_fraction = 0.05 if kind == "ellipse" else 0.5
    fitter = fit_ellipse if kind == "ellipse" else fit_hyperbola
    rows, skipped = [], []
    for t, f in snapshots:
        x, y = bump_points(r, f, height_fraction)
        try:
            fit = fitter(x, y)
        except FitError:
            skipped.append(t)
            continue
        rows.append((t, fit.a, fit.b, fit.k, fit.rms))
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    return ConicSeries(kind, *arr.T, skipped=skipped)


@dataclass(frozen=True)
class EllipseLaws:
    """Linear laws ``a = m_a t + b_a``, ``k = m_k t + b_k`` and ``b = c t**2``."""

    m_a: float
    b_a: float
    c: float
    m_k: float
    b_k: float
    samples: int


def ellipse_laws(series: ConicSeries, r_max: float, t_start: float = 10.0) -> EllipseLaws:
    """Fit the parameter laws over slices after ``t_start`` whose semi-axis stays inside ``r_max``."""
    t, a = select_fit_window(series.times, series.a, BeforeBoundaryHit(r_max))
    n = t.size
    b, k = series.b[:n], series.k[:n]
    keep = t >= t_start
    t, a, b, k = t[keep], a[keep], b[keep], k[keep]
    if t.size < 3:
        raise FitError("too few slices for the ellipse laws")
    la, lk = fit_line(t, a), fit_line(t, k)
    t2 = t * t
    c = float(t2 @ b / (t2 @ t2))
    return EllipseLaws(la.m, la.b, c, lk.m, lk.b, int(t.size))


def asymptote_line(series: ConicSeries, t_start: float = 5.0, t_stop: float = np.inf) -> LineFit:
    """Line through the asymptotic slope ``-b/a`` of a hyperbola series."""
    t, s = select_fit_window(series.times, series.slope, TimeRange(t_start, t_stop))
    return fit_line(t, s)


def c_R_from_run(result: SimulationResult, trim=(0.1, 0.1)):
    return extract_c_R(result.times, result.origin, trim)


# --- convergence presets ---------------------------------------------------

# the outer probe reads the node one cell inside r = 10
STANDARD_PROBES = (Probe(0.0, "E0"), Probe(10.0, "E10", -1))


def standard_lag(model) -> int:
    """Steps by which the charge-1 comparison runs stop short of the probe time."""
    return 5 if ModelKind(model) is ModelKind.CP1Q1 else 0


# --- cutoff against speed --------------------------------------------------


@dataclass(frozen=True)
class CutoffSpeedLaw:
    """``R = c2 x**2 + c1 x + c0`` with ``x = 1/|v0|``."""

    c2: float
    c1: float
    c0: float

    def __call__(self, v0):
        x = 1.0 / np.abs(np.asarray(v0, dtype=float))
        return self.c2 * x * x + self.c1 * x + self.c0


def cutoff_speed_law(v0_values, R_values) -> CutoffSpeedLaw:
    v0 = np.asarray(v0_values, dtype=float)
    R = np.asarray(R_values, dtype=float)
    if v0.size < 3 or v0.shape != R.shape:
        raise FitError("need at least 3 matching (v0, R) pairs")
    if np.any(v0 == 0):
        raise FitError("v0 must be nonzero")
    c2, c1, c0 = np.polyfit(1.0 / np.abs(v0), R, 2)
    return CutoffSpeedLaw(float(c2), float(c1), float(c0))
