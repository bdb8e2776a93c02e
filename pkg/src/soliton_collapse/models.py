"""Right-hand sides of the three radial wave equations.

Each equation has the form ``f_tt = L_n f + (lower-order terms)`` where
``L_n = r**-n d/dr (r**n d/dr)`` is discretized with half-node flux factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelKind, RadialGrid

#: exponent of the radial operator for each model
RADIAL_EXPONENT = {ModelKind.YM41: 5, ModelKind.CP1Q1: 3, ModelKind.CP1Q2: 5}


class DegenerateDenominator(ArithmeticError):
    """A model denominator vanished at an interior node."""


@dataclass(frozen=True)
class StencilQuery:
    q: int
    samples: np.ndarray
    fdot: float
    grid: RadialGrid


def natural_radial_operator(samples, q: int, n: int, dr: float) -> float:
    """Half-node flux discretization of ``r**-n (r**n f')'`` at interior node ``q``."""
    if n not in (3, 5):
        raise ValueError("exponent n must be 3 or 5")
    if not 1 <= q <= len(samples) - 2:
        raise ValueError(f"node {q} is not interior")
    f = samples
    up = ((q + 0.5) / q) ** n
    down = ((q - 0.5) / q) ** n
    return (up * (f[q + 1] - f[q]) - down * (f[q] - f[q - 1])) / dr**2


def _lower_order(model, r, f, fr, fdot):
    """Non-Laplacian terms; returns (value, denominator)."""
    if model is ModelKind.YM41:
        den = f + r * r
        return -8.0 * r * fr / den + 2.0 * (fdot * fdot - fr * fr) / den, den
    if model is ModelKind.CP1Q1:
        den = f * f + r * r
        return -4.0 * r * fr / den + 2.0 * f * (fdot * fdot - fr * fr) / den, den
    r3 = r**3
    den = f * f + r3 * r
    return -8.0 * r3 * fr / den + 2.0 * f * (fdot * fdot - fr * fr) / den, den


def eval_rhs(model: ModelKind, query: StencilQuery) -> float:
    """Full second time derivative at one interior node."""
    model = ModelKind(model)
    q, f, dr = query.q, query.samples, query.grid.dr
    lap = natural_radial_operator(f, q, RADIAL_EXPONENT[model], dr)
    r = q * dr
    fr = (f[q + 1] - f[q - 1]) / (2.0 * dr)
    with np.errstate(divide="ignore", invalid="ignore"):
        rest, den = _lower_order(model, r, float(f[q]), fr, float(query.fdot))
    if den == 0.0:
        raise DegenerateDenominator(f"{model.value} denominator vanishes at node {q}")
    return lap + rest


class RhsEvaluator:
    """Vectorized right-hand side over all interior nodes of a fixed grid.

    Coefficients are computed once per grid so the time loop only does
    array arithmetic.
    """

    def __init__(self, model: ModelKind, grid: RadialGrid):
        self.model = ModelKind(model)
        self.grid = grid
        n = RADIAL_EXPONENT[self.model]
        q = np.arange(1, grid.node_count - 1, dtype=float)
        dr = grid.dr
        self.r = q * dr
        self.up = ((q + 0.5) / q) ** n / dr**2
        self.down = ((q - 0.5) / q) ** n / dr**2
        self.inv_2dr = 1.0 / (2.0 * dr)
        if self.model is ModelKind.CP1Q2:
            self.r3 = self.r**3
            self.r4 = self.r3 * self.r

    def __call__(self, f: np.ndarray, fdot: np.ndarray) -> np.ndarray:
        """Right-hand side at nodes 1..Q-1 given full samples ``f`` and interior ``fdot``."""
        return self.frozen(f)(fdot)

    def frozen(self, f: np.ndarray):
        """Precompute every term that depends only on ``f``.

        Returns a function of the interior ``fdot`` array.  The corrector
        passes of one step share the same spatial data, so this avoids
        recomputing the stencil on every pass.
        """
        fm, fc, fp = f[:-2], f[1:-1], f[2:]
        lap = self.up * (fp - fc) - self.down * (fc - fm)
        fr = (fp - fm) * self.inv_2dr
        fr2 = fr * fr
        r = self.r
        model = self.model
        if model is ModelKind.YM41:
            den = fc + r * r
            self._check(den)
            base = lap - 8.0 * r * fr / den
            return lambda fdot: base + 2.0 * (fdot * fdot - fr2) / den
        if model is ModelKind.CP1Q1:
            den = fc * fc + r * r
            self._check(den)
            base = lap - 4.0 * r * fr / den
        else:
            den = fc * fc + self.r4
            self._check(den)
            base = lap - 8.0 * self.r3 * fr / den
        two_f = 2.0 * fc
        return lambda fdot: base + two_f * (fdot * fdot - fr2) / den

    def _check(self, den):
        if not np.all(den):
            q = int(np.flatnonzero(den == 0)[0]) + 1
            raise DegenerateDenominator(f"{self.model.value} denominator vanishes at node {q}")
