"""Collapse predictions from the reduced (static-family) dynamics.

For the 4+1 and charge-2 models the scale parameter follows a parabola
``f = a (t - T)**2``.  For charge 1 the kinetic term carries a cutoff
``R`` and the trajectory is obtained by integrating ``sqrt(K(f, R)) df``
with ``K(f, R) = ln(1 + R**2/f**2) - R**2/(f**2 + R**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelKind
from .fitting import FitError, LineFit, fit_line


def _check_positive(**values):
    for name, v in values.items():
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be finite and positive, got {v!r}")


def _check_velocity(v0):
    if not math.isfinite(v0) or v0 == 0.0:
        raise ValueError("a nonzero initial velocity is required for collapse")


@dataclass(frozen=True)
class PredictedParabola:
    a: float
    T: float

    def __call__(self, t):
        return self.a * (np.asarray(t, dtype=float) - self.T) ** 2


def predict_parabola(model: ModelKind, f0: float, v0: float) -> PredictedParabola:
    """Collapse parabola ``a = v0**2/(4 f0)``, ``T = 2 f0/|v0|``."""
    model = ModelKind(model)
    if model is ModelKind.CP1Q1:
        raise ValueError("charge 1 has no parabolic prediction; use trajectory_q1")
    _check_positive(f0=f0)
    _check_velocity(v0)
    return PredictedParabola(a=v0 * v0 / (4.0 * f0), T=2.0 * f0 / abs(v0))


@dataclass(frozen=True)
class ProfileParabola:
    """Self-similar profile ``f(r, t) = p r**2 + a (t - T)**2``."""

    p: float
    a: float
    T: float

    def h(self, t):
        return self.a * (np.asarray(t, dtype=float) - self.T) ** 2

    def __call__(self, r, t):
        return self.p * np.asarray(r, dtype=float) ** 2 + self.h(t)


def profile_parabola(f0: float, v0: float, positive_curvature: bool = False) -> ProfileParabola:
    """Parabolic profile whose height follows the collapse parabola.

    The curvature is ``-v0**2/(8 f0)`` unless ``positive_curvature`` is set.
    """
    _check_positive(f0=f0)
    _check_velocity(v0)
    p = v0 * v0 / (8.0 * f0)
    return ProfileParabola(p=p if positive_curvature else -p, a=v0 * v0 / (4.0 * f0), T=2.0 * f0 / abs(v0))


def profile_residual(model: ModelKind, f0: float, v0: float, r, t):
    """Amount by which the parabolic profile fails to solve the equation.

    Measured after clearing the model's denominator: ``2 a**2 r**2`` for the
    4+1 model and ``a**3 (r**4 - 2 r**2 tau**2)`` for charge 2, where
    ``a = v0**2/(4 f0)`` and ``tau = t - 2 f0/|v0|``.
    """
    model = ModelKind(model)
    _check_positive(f0=f0)
    _check_velocity(v0)
    r = np.asarray(r, dtype=float)
    a = v0 * v0 / (4.0 * f0)
    if model is ModelKind.YM41:
        return 2.0 * a * a * r * r
    if model is ModelKind.CP1Q2:
        tau = np.asarray(t, dtype=float) - 2.0 * f0 / abs(v0)
        v6 = v0**6
        return v6 * r**4 / (64.0 * f0**3) - v6 * r * r * tau * tau / (32.0 * f0**3)
    raise ValueError("profile residuals exist only for YM41 and CP1Q2")


# --- charge-1 trajectory -----------------------------------------------------


def _kinetic_scalar(f: float, R: float) -> float:
    x = (R / f) ** 2
    if x >= 1e-2:
        return math.log1p(x) - x / (1.0 + x)
    # sum_{n>=2} (-1)**n (n-1)/n x**n avoids cancellation when x is small
    total, xn = 0.0, x * x
    for n in range(2, 10):
        total += (-1) ** n * (n - 1) / n * xn
        xn *= x
    return total


def kinetic_norm_q1(f, R):
    """``ln(1 + R**2/f**2) - R**2/(f**2 + R**2)``, accurate for large ``f/R`` too."""
    arr = np.asarray(f, dtype=float)
    if np.any(~(arr > 0)) or not (R > 0):
        raise ValueError("f and R must be positive")
    out = np.vectorize(_kinetic_scalar, otypes=[float])(arr, float(R))
    return out[()] if out.ndim == 0 else out


def _simpson_adaptive(fun, a, b, tol, fa=None, fm=None, fb=None, depth=50):
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``."""
    if fa is None:
        fa, fb = fun(a), fun(b)
        fm = fun(0.5 * (a + b))
    m = 0.5 * (a + b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_step(fun, a, m, b, fa, fm, fb, whole, tol, depth)


def _simpson_step(fun, a, m, b, fa, fm, fb, whole, tol, depth):
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = fun(lm), fun(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return _simpson_step(fun, a, lm, m, fa, flm, fm, left, tol / 2, depth - 1) + _simpson_step(
        fun, m, rm, b, fm, frm, fb, right, tol / 2, depth - 1
    )


@dataclass(frozen=True)
class LagrangianTrajectory:
    c: float
    R_eff: float
    times: np.ndarray
    f: np.ndarray
    collapsed: np.ndarray
    collapse_time: float

    @property
    def points(self):
        return list(zip(self.times.tolist(), self.f.tolist()))


class _CumulativeIntegral:
    """``F(f) = integral from f to f0 of sqrt(K(s, R)) ds`` on a geometric grid in ``f``."""

    def __init__(self, f0, R, tol=1e-10, ratio=0.9, floor=1e-14):
        self.f0, self.R, self.tol = f0, R, tol
        n = int(math.ceil(math.log(floor) / math.log(ratio)))
        self.nodes = f0 * ratio ** np.arange(n + 1)
        seg_tol = tol / n
        self.integrand = lambda s: math.sqrt(_kinetic_scalar(s, R))
        pieces = [
            _simpson_adaptive(self.integrand, lo, hi, seg_tol)
            for hi, lo in zip(self.nodes[:-1], self.nodes[1:])
        ]
        self.cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
        # below the last node sqrt(K) ~ sqrt(2 ln(R/s) - 1); its integral is negligible
        eps = self.nodes[-1]
        self.total = self.cumulative[-1] + eps * math.sqrt(max(2.0 * math.log(R / eps) - 1.0, 0.0))

    def value(self, f, j):
        """``F(f)`` for ``f`` inside segment ``[nodes[j+1], nodes[j]]``."""
        if f >= self.nodes[j]:
            return self.cumulative[j]
        return self.cumulative[j] + _simpson_adaptive(self.integrand, f, self.nodes[j], self.tol / 10)

    def invert(self, target, rtol):
        """Solve ``F(f) = target`` for ``f``."""
        if target <= 0.0:
            return self.f0
        # bisection over the monotone table
        j = int(np.searchsorted(self.cumulative, target, side="right")) - 1
        if j >= len(self.nodes) - 1:
            return 0.0
        hi, lo = self.nodes[j], self.nodes[j + 1]
        w = (target - self.cumulative[j]) / (self.cumulative[j + 1] - self.cumulative[j])
        f = hi + w * (lo - hi)
        # polish with Newton steps; dF/df = -sqrt(K)
        for _ in range(8):
            step = (self.value(f, j) - target) / self.integrand(f)
            f_new = min(max(f + step, lo), hi)
            if abs(f_new - f) <= rtol * self.f0:
                return f_new
            f = f_new
        return f


def trajectory_q1(f0: float, c: float, R: float, times, tol: float = 1e-10, ratio: float = 0.9):
    """Predicted charge-1 origin trace: solve ``F(f(t)) = c t`` at each time."""
    _check_positive(f0=f0, c=c, R=R)
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be non-negative and increasing")
    table = _CumulativeIntegral(f0, R, tol=tol, ratio=ratio)
    collapse_time = table.total / c
    f = np.empty_like(times)
    collapsed = times * c >= table.total
    for i, t in enumerate(times):
        f[i] = 0.0 if collapsed[i] else table.invert(c * t, rtol=tol)
    return LagrangianTrajectory(c=c, R_eff=R, times=times, f=f, collapsed=collapsed, collapse_time=collapse_time)


def collapse_integral_q1(f0: float, R: float, tol: float = 1e-10) -> float:
    """``integral from 0 to f0 of sqrt(K(f, R)) df``; equals ``c`` times the collapse time."""
    _check_positive(f0=f0, R=R)
    return _CumulativeIntegral(f0, R, tol=tol).total


def c_R_from_line(line: LineFit):
    """Invert ``1/fdot**2 = m ln f + b`` into the kinetic constant and cutoff."""
    if not line.m < 0:
        raise FitError("slope of 1/fdot**2 against ln f must be negative")
    return math.sqrt(-2.0 / line.m), math.exp(-line.b / line.m + 0.5)


def extract_c_R(times, f, trim=(0.1, 0.1)):
    """Estimate ``(c, R_eff, line)`` from an origin trace.

    ``fdot`` is estimated with centred differences; the regression of
    ``1/fdot**2`` on ``ln f`` uses the part of the run left after trimming the
    given fractions of its duration from each end.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(f, dtype=float)
    if t.size < 5:
        raise FitError("trace too short for centred differences")
    fdot = (y[2:] - y[:-2]) / (t[2:] - t[:-2])
    t_mid, f_mid = t[1:-1], y[1:-1]
    span = t[-1] - t[0]
    keep = (t_mid >= t[0] + trim[0] * span) & (t_mid <= t[-1] - trim[1] * span)
    keep &= (f_mid > 0) & (fdot != 0)
    if keep.sum() < 2:
        raise FitError("window leaves too few points")
    line = fit_line(np.log(f_mid[keep]), 1.0 / fdot[keep] ** 2)
    c, R_eff = c_R_from_line(line)
    return c, R_eff, line


@dataclass(frozen=True)
class EmpiricalLineLaw:
    T: float
    m: float


def empirical_line_law_q1(f0: float, v0: float) -> EmpiricalLineLaw:
    """Rule of thumb for the charge-1 origin line: ``T = 1.2 f0/|v0|``, ``m = -0.75 |v0|``."""
    _check_positive(f0=f0)
    _check_velocity(v0)
    return EmpiricalLineLaw(T=1.2 * f0 / abs(v0), m=-0.75 * abs(v0))
