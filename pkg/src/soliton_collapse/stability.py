"""Near-origin linear stability of the discretized equations.

Two tools live here.  The first builds the tridiagonal matrix of the
linearized scheme on the first ``n`` interior nodes, with the origin rule
folded into row 1, and computes its spectrum.  The second is the plane-wave
(Von Neumann) analysis of the leapfrog update, which gives the amplification
factors of a single Fourier mode.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import ModelKind


class EigenvalueError(ArithmeticError):
    """The QR iteration failed to converge within its iteration cap."""


@dataclass(frozen=True)
class TridiagonalMatrix:
    diag: np.ndarray
    sub: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValueError("off-diagonal bands must have length n - 1")

    @property
    def order(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def entry(self, i: int, j: int) -> float:
        """Entry ``a_{i,j}`` with 1-based indices."""
        if i == j:
            return float(self.diag[i - 1])
        if i == j + 1:
            return float(self.sub[j - 1])
        if j == i + 1:
            return float(self.sup[i - 1])
        return 0.0


@dataclass(frozen=True)
class StabilityContext:
    model: ModelKind
    n: int
    f0: float
    fdot0: float
    dr: float

    def __post_init__(self):
        object.__setattr__(self, "model", ModelKind(self.model))
        if self.model is ModelKind.CP1Q2:
            raise ValueError("stability matrices are defined for YM41 and CP1Q1 only")
        if self.n < 2 or not self.f0 > 0 or not self.dr > 0:
            raise ValueError("need n >= 2, f0 > 0 and dr > 0")

    @property
    def lift_constant(self) -> float:
        """Constant ``c`` of the velocity term, treated as ``c * I`` near the origin."""
        if self.model is ModelKind.YM41:
            return 4.0 * self.fdot0 / self.f0
        return 4.0 * self.f0 * self.fdot0 / (self.dr**2 + self.f0**2)


def build_linearized_matrix(ctx: StabilityContext) -> TridiagonalMatrix:
    n, f0, v, dr = ctx.n, ctx.f0, ctx.fdot0, ctx.dr
    k = np.arange(1, n + 1, dtype=float)
    inv_dr2 = dr**-2
    if ctx.model is ModelKind.YM41:
        lower = 4.0 * k / f0 + k**-5 * inv_dr2 * (k - 0.5) ** 5
        diag = k**-5 * inv_dr2 * (-((k + 0.5) ** 5) - (k - 0.5) ** 5) - 2.0 * (v / f0) ** 2
        upper = -4.0 * k / f0 + k**-5 * inv_dr2 * (k + 0.5) ** 5
        # the printed row-1 entries, with the origin rule folded in
        origin = 4.0 / f0 + inv_dr2 * 0.5**5
        diag[0] = 4.0 / 3.0 * origin + inv_dr2 * (-(1.5**5) - 0.5**5) - 2.0 * (v / f0) ** 2
        upper[0] = -1.0 / 3.0 * origin - 4.0 / f0 + inv_dr2 * 1.5**5
    else:
        den = k * k * dr * dr + f0 * f0
        lower = (k - 0.5) ** 3 / (k**3 * dr * dr) + 2.0 * k * k * dr / den
        diag = (
            -((k + 0.5) ** 3) / (k**3 * dr * dr)
            - (k - 0.5) ** 3 / (k**3 * dr * dr)
            + 2.0 * v * v / den
            - 4.0 * f0 * f0 * v * v / den**2
        )
        upper = (k + 0.5) ** 3 / (k**3 * dr * dr) - 2.0 * k * k * dr / den
        den1 = dr * dr + f0 * f0
        origin = 0.5**3 / dr**2 + 2.0 * dr / den1
        # row 1 as printed: its last term has an unsquared denominator
        diag[0] = (
            4.0 / 3.0 * origin
            - 1.5**3 / dr**2
            - 0.5**3 / dr**2
            + 2.0 * v * v / den1
            - 4.0 * f0 * f0 * v * v / den1
        )
        upper[0] = -1.0 / 3.0 * origin + 1.5**3 / dr**2 - 2.0 * dr / den1
    return TridiagonalMatrix(diag=diag, sub=lower[1:], sup=upper[:-1])


# --- eigenvalues: balancing, Hessenberg reduction, Francis double-shift QR ---


def _balance(a: np.ndarray) -> np.ndarray:
    """Diagonal similarity by powers of two making row and column norms comparable."""
    a = a.copy()
    n = a.shape[0]
    radix = 2.0
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g, f, s = r / radix, 1.0, c + r
            while c < g:
                f *= radix
                c *= radix * radix
            g = r * radix
            while c > g:
                f /= radix
                c /= radix * radix
            if (c + r) / f < 0.95 * s:
                converged = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def _householder(x: np.ndarray):
    """Return ``(v, beta)`` with ``(I - beta v v^T) x`` a multiple of ``e_1``."""
    peak = float(np.abs(x).max())
    # the reflector is scale invariant; normalizing keeps the squares out of subnormals
    x = x / peak if peak > 0 else x.astype(float)
    sigma = float(x[1:] @ x[1:])
    v = x.copy()
    v[0] = 1.0
    if sigma <= (np.finfo(float).eps * x[0]) ** 2:
        return v, 0.0
    mu = math.sqrt(x[0] * x[0] + sigma)
    v0 = x[0] - mu if x[0] <= 0 else -sigma / (x[0] + mu)
    beta = 2.0 * v0 * v0 / (sigma + v0 * v0)
    v[1:] = x[1:] / v0
    return v, beta


def _hessenberg(a: np.ndarray) -> np.ndarray:
    h = a.copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k]
        if np.all(x[1:] == 0.0):
            continue
        v, beta = _householder(x)
        h[k + 1 :, k:] -= beta * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= beta * np.outer(h[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h


def _eig2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]]."""
    half_tr = 0.5 * (a + d)
    det = a * d - b * c
    disc = (0.5 * (a - d)) ** 2 + b * c
    if disc >= 0.0:
        s = math.sqrt(disc)
        big = half_tr + math.copysign(s, half_tr)
        other = half_tr - math.copysign(s, half_tr)
        # det/big recovers the small root accurately, but only when big itself
        # is not rounding noise
        if abs(big) > 64 * np.finfo(float).eps * (abs(a) + abs(b) + abs(c) + abs(d)):
            other = det / big
        return complex(big), complex(other)
    s = math.sqrt(-disc)
    return complex(half_tr, s), complex(half_tr, -s)


def _francis_step(h, lo, hi, exceptional):
    """One implicit double-shift QR sweep on the active block ``h[lo:hi+1, lo:hi+1]``."""
    a = h[lo : hi + 1, lo : hi + 1]
    m = a.shape[0]
    eps = np.finfo(float).eps
    if exceptional:
        w = abs(a[m - 1, m - 2]) + abs(a[m - 2, m - 3])
        s, t = 1.5 * w, w * w
    else:
        s = a[m - 2, m - 2] + a[m - 1, m - 1]
        t = a[m - 2, m - 2] * a[m - 1, m - 1] - a[m - 2, m - 1] * a[m - 1, m - 2]
    # start the bulge at the lowest row where the coupling to the rows above
    # is negligible, otherwise a tiny first column can stall the sweep
    for start in range(m - 3, -1, -1):
        d = a[start, start]
        x = d * d + a[start, start + 1] * a[start + 1, start] - s * d + t
        y = a[start + 1, start] * (d + a[start + 1, start + 1] - s)
        z = a[start + 1, start] * a[start + 2, start + 1]
        if start == 0:
            break
        coupling = abs(a[start, start - 1]) * (abs(y) + abs(z))
        scale = abs(x) * (abs(a[start - 1, start - 1]) + abs(d) + abs(a[start + 1, start + 1]))
        if coupling <= eps * scale:
            break
    for k in range(start, m - 2):
        v, beta = _householder(np.array([x, y, z]))
        q = max(start, k - 1)
        a[k : k + 3, q:] -= beta * np.outer(v, v @ a[k : k + 3, q:])
        if k == start > 0:
            # the fill this would put below a[start, start-1] is negligible by choice of start
            a[start, start - 1] *= 1.0 - beta
        r = min(k + 4, m)
        a[:r, k : k + 3] -= beta * np.outer(a[:r, k : k + 3] @ v, v)
        x = a[k + 1, k]
        y = a[k + 2, k]
        if k < m - 3:
            z = a[k + 3, k]
    v, beta = _householder(np.array([x, y]))
    a[m - 2 :, m - 3 :] -= beta * np.outer(v, v @ a[m - 2 :, m - 3 :])
    a[:, m - 2 :] -= beta * np.outer(a[:, m - 2 :] @ v, v)


def _hqr(h: np.ndarray, max_iter: int) -> list:
    h = h.copy()
    n = h.shape[0]
    eps = np.finfo(float).eps
    norm = float(np.abs(h).sum()) or 1.0
    tiny = np.finfo(float).tiny * (n / eps)
    out = []
    hi = n - 1
    its = 0
    total = 0
    while hi >= 0:
        # find the start of the unreduced block ending at hi
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = norm
            if abs(h[lo, lo - 1]) <= max(eps * s, tiny):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            out.append(complex(h[hi, hi]))
            hi -= 1
            its = 0
        elif lo == hi - 1:
            out.extend(_eig2(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi]))
            hi -= 2
            its = 0
        else:
            if total >= max_iter:
                raise EigenvalueError(f"QR iteration did not converge in {max_iter} sweeps")
            if its >= 30:
                # stalled: drop the smallest subdiagonal if it is negligible
                # against the whole matrix
                j = lo + 1 + int(np.argmin(np.abs(np.diag(h, -1)[lo:hi])))
                if abs(h[j, j - 1]) <= eps * norm:
                    h[j, j - 1] = 0.0
                    its = 0
                    continue
            its += 1
            total += 1
            _francis_step(h, lo, hi, exceptional=its % 10 == 0)
    return out


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))


def eigenvalues(matrix) -> Spectrum:
    """Eigenvalues of a small general matrix, sorted by real part then imaginary part."""
    a = matrix.dense() if isinstance(matrix, TridiagonalMatrix) else np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n > 128:
        raise ValueError("dense eigenvalue routine is limited to order 128")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    # an exact power-of-two rescale keeps tiny or huge entries clear of under/overflow
    b = _balance(a)
    peak = float(np.abs(b).max())
    scale = 2.0 ** round(math.log2(peak)) if peak > 0 else 1.0
    vals = [z * scale for z in _hqr(_hessenberg(b / scale), max_iter=100 * n)]
    vals.sort(key=lambda z: (z.real, z.imag))
    return Spectrum(np.array(vals, dtype=complex))


def lift_eigenvalue(alpha: complex, c: float):
    """Roots of ``lambda**2 - c lambda - alpha = 0`` (``+`` root first)."""
    root = cmath.sqrt(c * c + 4.0 * alpha)
    return (c + root) / 2.0, (c - root) / 2.0


# --- Von Neumann analysis ------------------------------------------------------


@dataclass(frozen=True)
class VNQuery:
    model: ModelKind
    kappa: float
    r: float
    f0: float
    dr: float
    dt: float


@dataclass(frozen=True)
class VNResult:
    J: complex
    x_plus: complex
    x_minus: complex
    omega_plus: complex
    omega_minus: complex

    @property
    def growth_plus(self) -> float:
        return abs(self.x_plus)

    @property
    def growth_minus(self) -> float:
        return abs(self.x_minus)


def symbol(model: ModelKind, kappa: float, r: float, f0: float, dr: float) -> complex:
    """Discrete symbol ``J`` of the linearized spatial operator acting on ``exp(i kappa r)``."""
    model = ModelKind(model)
    theta = kappa * dr
    q = r / dr
    e_plus, e_minus = cmath.exp(1j * theta), cmath.exp(-1j * theta)
    if model is ModelKind.YM41:
        lap = ((q + 0.5) ** 5 * (e_plus - 1.0) - (q - 0.5) ** 5 * (1.0 - e_minus)) / (q**5 * dr * dr)
        return lap - 4.0 * q * (e_plus - e_minus) / (f0 + r * r)
    if model is ModelKind.CP1Q1:
        lap = ((q + 0.5) ** 3 * (e_plus - 1.0) - (q - 0.5) ** 3 * (1.0 - e_minus)) / (q**3 * dr * dr)
        return lap - 2.0 * q * q * dr * (e_plus - e_minus) / (q * q * dr * dr + f0 * f0)
    raise ValueError("Von Neumann analysis is defined for YM41 and CP1Q1 only")


def amplification(J: complex, dt: float):
    """Both roots of ``x**2 - (2 + J dt**2) x + 1 = 0``; their product is 1."""
    jd = J * dt * dt
    b = 2.0 + jd
    root = cmath.sqrt(jd * (4.0 + jd))  # b**2 - 4 without cancellation
    x_plus = (b + root) / 2.0
    if x_plus == 0:
        x_plus = (b - root) / 2.0
    return x_plus, 1.0 / x_plus


def von_neumann(query: VNQuery) -> VNResult:
    if not query.r > 0:
        raise ValueError("r must be positive")
    if not abs(query.kappa * query.dr) < math.pi:
        raise ValueError("kappa * dr must lie below pi")
    J = symbol(query.model, query.kappa, query.r, query.f0, query.dr)
    x_plus, x_minus = amplification(J, query.dt)
    omega = lambda x: -1j * cmath.log(x) / query.dt  # noqa: E731
    return VNResult(J=J, x_plus=x_plus, x_minus=x_minus, omega_plus=omega(x_plus), omega_minus=omega(x_minus))


# --- parameter sweeps ----------------------------------------------------------


@dataclass(frozen=True)
class SweepEntry:
    context: StabilityContext
    spectrum: Spectrum


@dataclass(frozen=True)
class SweepReport:
    entries: tuple
    max_real: float
    worst: StabilityContext

    @property
    def all_negative(self) -> bool:
        return self.max_real < 0.0

    @property
    def violations(self) -> list:
        return [e.context for e in self.entries if e.spectrum.max_real >= 0.0]


def negative_spectrum_check(model, f0_values, fdot0_values, dr_values, n_values) -> SweepReport:
    """Spectra over the Cartesian product of parameters; reports the largest real part."""
    entries = []
    for f0, v, dr, n in itertools.product(f0_values, fdot0_values, dr_values, n_values):
        ctx = StabilityContext(model, int(n), float(f0), float(v), float(dr))
        entries.append(SweepEntry(ctx, eigenvalues(build_linearized_matrix(ctx))))
    if not entries:
        raise ValueError("empty parameter sweep")
    worst = max(entries, key=lambda e: e.spectrum.max_real)
    return SweepReport(tuple(entries), worst.spectrum.max_real, worst.context)
