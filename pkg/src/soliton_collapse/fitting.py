"""Least-squares fits for traces and time slices.

Lines and vertex-form parabolas describe the origin trace ``f(0, t)``.
Axis-aligned ellipses and hyperbolas, centred on the r = 0 axis, describe the
bump of a single time slice ``f(r, t)``.  Conics are fitted in the algebraic
form ``y**2 = A + B x**2 + C y``, which is linear in ``(A, B, C)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class FitError(ValueError):
    """The data cannot be described by the requested curve."""


@dataclass(frozen=True)
class LineFit:
    m: float
    b: float
    rms: float

    @property
    def zero_crossing(self) -> float:
        """Abscissa where the line reaches zero (``-b / m``)."""
        return -self.b / self.m

    def __call__(self, x):
        return self.m * np.asarray(x) + self.b


@dataclass(frozen=True)
class ParabolaFit:
    """``y = a (t - T)**2 + offset``."""

    a: float
    T: float
    offset: float
    rms: float

    def __call__(self, t):
        return self.a * (np.asarray(t) - self.T) ** 2 + self.offset


@dataclass(frozen=True)
class EllipseFit:
    """Upper or lower half of ``x**2/a**2 + (y - k)**2/b**2 = 1``."""

    a: float
    b: float
    k: float
    rms: float


@dataclass(frozen=True)
class HyperbolaFit:
    """A branch of ``(y - k)**2/b**2 - x**2/a**2 = 1``."""

    a: float
    b: float
    k: float
    rms: float

    @property
    def asymptotic_slope(self) -> float:
        """Slope ``-b/a`` of the asymptote of the lower branch for x > 0."""
        return -self.b / self.a


def _xy(x, y, minimum):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise FitError("x and y must have the same length")
    if x.size < minimum:
        raise FitError(f"need at least {minimum} points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("data contain non-finite values")
    return x, y


def _rms(residual) -> float:
    return float(np.sqrt(np.mean(np.square(residual))))


def fit_line(x, y) -> LineFit:
    """Least-squares line through ``(x, y)``."""
    x, y = _xy(x, y, 2)
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise FitError("all abscissae are equal")
    m = float(dx @ (y - ym)) / sxx
    b = float(ym - m * xm)
    return LineFit(m=m, b=b, rms=_rms(y - (m * x + b)))


def fit_parabola_vertex(t, y) -> ParabolaFit:
    """Least-squares quadratic rewritten in vertex form."""
    t, y = _xy(t, y, 3)
    if np.unique(t).size < 3:
        raise FitError("need at least 3 distinct abscissae")
    # fit in a centred, scaled variable for conditioning
    mu = t.mean()
    sigma = float(np.abs(t - mu).max())
    s = (t - mu) / sigma
    design = np.column_stack([s * s, s, np.ones_like(s)])
    (c2, c1, c0), *_ = np.linalg.lstsq(design, y, rcond=None)
    if c2 == 0.0 or abs(c2) <= 1e-14 * (abs(c1) + abs(c0)):
        raise FitError("leading coefficient vanishes; the data are a line")
    a = c2 / sigma**2
    T = mu - sigma * c1 / (2.0 * c2)
    offset = c0 - c1 * c1 / (4.0 * c2)
    fit = ParabolaFit(a=float(a), T=float(T), offset=float(offset), rms=0.0)
    return ParabolaFit(fit.a, fit.T, fit.offset, _rms(y - fit(t)))


def _algebraic_conic(x, y):
    """Solve ``y**2 = A + B x**2 + C y`` in the least-squares sense."""
    x, y = _xy(x, y, 3)
    x2 = x * x
    if np.unique(x2).size < 3:
        raise FitError("need at least 3 distinct values of x**2")
    cols = [np.ones_like(x), x2, y]
    scale = np.array([max(float(np.abs(c).max()), 1e-300) for c in cols])
    design = np.column_stack(cols) / scale
    coef, *_ = np.linalg.lstsq(design, y * y, rcond=None)
    A, B, C = coef / scale
    return x, y, float(A), float(B), float(C)


def _branch_residual(x, y, k, b, inner):
    """Vertical distance to whichever branch (above or below k) each point lies on."""
    branch = np.where(y >= k, 1.0, -1.0)
    return y - (k + branch * b * np.sqrt(np.maximum(inner, 0.0)))


def fit_ellipse(x, y) -> EllipseFit:
    """Fit ``x**2/a**2 + (y - k)**2/b**2 = 1`` to points of one half of the ellipse."""
    x, y, A, B, C = _algebraic_conic(x, y)
    if B >= 0.0:
        raise FitError("fitted conic is not an ellipse (x**2 coefficient is not negative)")
    k = C / 2.0
    b2 = A + k * k
    if b2 <= 0.0:
        raise FitError("inconsistent data: fitted b**2 is not positive")
    a2 = -b2 / B
    a, b = math.sqrt(a2), math.sqrt(b2)
    res = _branch_residual(x, y, k, b, 1.0 - x * x / a2)
    return EllipseFit(a=a, b=b, k=k, rms=_rms(res))


def fit_hyperbola(x, y) -> HyperbolaFit:
    """Fit ``(y - k)**2/b**2 - x**2/a**2 = 1`` to points of one branch."""
    x, y, A, B, C = _algebraic_conic(x, y)
    if B <= 0.0:
        raise FitError("fitted conic is not a hyperbola (x**2 coefficient is not positive)")
    k = C / 2.0
    b2 = A + k * k
    if b2 <= 0.0:
        raise FitError("inconsistent data: fitted b**2 is not positive")
    a2 = b2 / B
    a, b = math.sqrt(a2), math.sqrt(b2)
    res = _branch_residual(x, y, k, b, 1.0 + x * x / a2)
    return HyperbolaFit(a=a, b=b, k=k, rms=_rms(res))


# --- fit windows -----------------------------------------------------------


@dataclass(frozen=True)
class AfterFraction:
    """Keep the trace from the first point with ``y <= fraction * f0`` onward."""

    fraction: float
    f0: float | None = None

    def describe(self) -> str:
        return f"after y <= {self.fraction:g}*f0"


@dataclass(frozen=True)
class TimeRange:
    """Keep points with ``t_start <= t <= t_stop``."""

    t_start: float
    t_stop: float

    def describe(self) -> str:
        return f"{self.t_start:g} <= t <= {self.t_stop:g}"


@dataclass(frozen=True)
class BeforeBoundaryHit:
    """Keep entries of a semi-axis series while it stays below ``a_max``."""

    a_max: float

    def describe(self) -> str:
        return f"a < {self.a_max:g}"


def select_fit_window(t, y, mode):
    """Return the ``(t, y)`` arrays restricted to ``mode``.

    For :class:`AfterFraction`, ``f0`` defaults to the first sample.  For
    :class:`BeforeBoundaryHit`, ``y`` is the fitted semi-axis series and the
    window ends at the first entry reaching ``a_max``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size == 0:
        raise FitError("empty trace")
    if isinstance(mode, AfterFraction):
        f0 = y[0] if mode.f0 is None else mode.f0
        hits = np.flatnonzero(y <= mode.fraction * f0)
        keep = np.zeros(t.size, bool)
        if hits.size:
            keep[hits[0]:] = True
    elif isinstance(mode, TimeRange):
        keep = (t >= mode.t_start) & (t <= mode.t_stop)
    elif isinstance(mode, BeforeBoundaryHit):
        over = np.flatnonzero(~(y < mode.a_max))
        keep = np.ones(t.size, bool)
        if over.size:
            keep[over[0]:] = False
    else:
        raise TypeError(f"unknown window mode {mode!r}")
    if not keep.any():
        raise FitError(f"window {mode.describe()} selects no points")
    return t[keep], y[keep]
