import cmath
import math

import numpy as np
import pytest

from soliton_collapse.stability import (
    StabilityContext,
    TridiagonalMatrix,
    VNQuery,
    amplification,
    build_linearized_matrix,
    eigenvalues,
    lift_eigenvalue,
    negative_spectrum_check,
    symbol,
    von_neumann,
)


def matrix(model, n=5, f0=1.0, v=-0.01, dr=0.01):
    return build_linearized_matrix(StabilityContext(model, n, f0, v, dr))


def test_ym41_printed_entries():
    m = matrix("YM41")
    assert round(m.entry(1, 1)) == -75828
    assert round(m.entry(1, 2)) == 75828
    assert round(m.entry(2, 2)) == -32891
    assert round(m.entry(4, 5)) == 18004
    # the table prints 5925.0 and 2381.1; the formulas give 5924.9 and 2381.05
    assert m.entry(5, 4) == pytest.approx(5925.0, abs=0.15)
    assert m.entry(2, 1) == pytest.approx(2381.1, abs=0.06)


def test_cp1q1_printed_entries():
    m = matrix("CP1Q1")
    assert round(m.entry(1, 1), 1) == -33333.3
    assert round(m.entry(1, 2), 1) == 33333.3
    # coarse grid, printed to four figures
    assert round(matrix("CP1Q1", dr=0.1).entry(1, 1), 1) == -333.1


@pytest.mark.parametrize("model", ["YM41", "CP1Q1"])
def test_matrix_is_tridiagonal(model):
    m = matrix(model, n=8)
    dense = m.dense()
    i, j = np.indices(dense.shape)
    assert np.all(dense[np.abs(i - j) > 1] == 0)
    assert np.all(np.diag(dense, 1) != 0) and np.all(np.diag(dense, -1) != 0)
    assert m.entry(1, 3) == 0.0 and m.order == 8


def test_context_validation():
    with pytest.raises(ValueError):
        StabilityContext("CP1Q2", 5, 1.0, -0.01, 0.01)
    with pytest.raises(ValueError):
        StabilityContext("YM41", 1, 1.0, -0.01, 0.01)
    with pytest.raises(ValueError):
        TridiagonalMatrix(np.ones(3), np.ones(1), np.ones(2))


def test_diagonal_eigenvalues():
    vals = eigenvalues(np.diag([-1.0, -2.0, -3.0])).eigenvalues
    np.testing.assert_allclose(vals, [-3, -2, -1], atol=1e-14)


def test_complex_pair():
    vals = eigenvalues(np.array([[0.0, -1.0], [1.0, 0.0]])).eigenvalues
    np.testing.assert_allclose(vals, [-1j, 1j], atol=1e-14)


def char_poly_residual(a, lam):
    """|det(A - lam I)| relative to the size of the matrix."""
    n = a.shape[0]
    return abs(np.linalg.det(a - lam * np.eye(n))) / np.linalg.norm(a) ** n


@pytest.mark.parametrize("model", ["YM41", "CP1Q1"])
@pytest.mark.parametrize("n", [5, 10, 20])
def test_spectrum_two_routes(model, n):
    m = matrix(model, n=n)
    ours = eigenvalues(m).eigenvalues
    ref = np.sort_complex(np.linalg.eigvals(m.dense()))
    np.testing.assert_allclose(np.sort_complex(ours), ref, rtol=1e-10)
    for lam in ours:
        assert char_poly_residual(m.dense(), lam) < 1e-10


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("n", [3, 12, 40])
def test_random_matrices_match_numpy(seed, n):
    a = np.random.default_rng(seed).standard_normal((n, n))
    ours = np.sort_complex(eigenvalues(a).eigenvalues)
    ref = np.sort_complex(np.linalg.eigvals(a))
    np.testing.assert_allclose(ours, ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())


def _cycle():
    a = np.zeros((5, 5))
    a[0, 3] = a[2, 0] = a[3, 2] = 1.0
    return a


def _tiny_around_one():
    a = np.full((3, 3), 5.28587384e-159)
    a[1, 1] = 1.0
    return a


def _decoupled_corner():
    a = np.full((3, 3), 2.66712154e-137)
    a[2, 1] = 1.0
    return a


def _defective_zero():
    a = np.zeros((8, 8))
    a[3, 7] = -0.940532335750655
    a[6, 6] = a[6, 7] = a[7, 1] = 1.0
    return a


@pytest.mark.parametrize("build", [_cycle, _tiny_around_one, _decoupled_corner, _defective_zero])
def test_awkward_matrices(build):
    a = build()
    ours = eigenvalues(a).eigenvalues
    ref = np.linalg.eigvals(a)
    assert abs(ours.sum() - np.trace(a)) < 1e-12
    np.testing.assert_allclose(np.poly(ours), np.poly(ref), atol=1e-12)


def test_graded_matrix():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((20, 20)) * np.exp(rng.uniform(-20, 20, 20))[:, None]
    ours = np.sort_complex(eigenvalues(a).eigenvalues)
    ref = np.sort_complex(np.linalg.eigvals(a))
    np.testing.assert_allclose(ours, ref, rtol=1e-9, atol=1e-12 * np.abs(ref).max())


def test_eigenvalue_input_checks():
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan, 0], [0, 1]]))


@pytest.mark.parametrize(
    "alpha,c,expected",
    [(0, 2, (2, 0)), (-1, 0, (1j, -1j)), (-1, 1, (0.5 + 0.8660254037844386j, 0.5 - 0.8660254037844386j))],
)
def test_lift(alpha, c, expected):
    got = lift_eigenvalue(alpha, c)
    assert got[0] == pytest.approx(expected[0], abs=1e-15)
    assert got[1] == pytest.approx(expected[1], abs=1e-15)
    for lam in got:
        assert abs(lam * lam - c * lam - alpha) < 1e-14


def test_lift_real_part_below_c_for_negative_alpha():
    for alpha in (-0.1, -5.0, -1e4):
        for lam in lift_eigenvalue(alpha, 0.3):
            assert lam.real <= 0.3


def test_von_neumann_constant_mode():
    res = von_neumann(VNQuery("YM41", 0.0, 1.0, 1.0, 0.01, 1e-4))
    assert res.J == 0 and res.x_plus == 1 and res.omega_plus == 0
    assert res.growth_plus == 1.0 and res.growth_minus == 1.0


def test_von_neumann_ym41_example():
    theta = math.pi / 2
    res = von_neumann(VNQuery("YM41", theta / 0.01, 1.0, 1.0, 0.01, 1e-4))
    assert res.J.real == pytest.approx(-2.0e4, rel=1e-3)
    assert res.J.imag == pytest.approx(1.0e2, rel=1e-3)
    assert abs(res.growth_plus - 1) < 1e-3 and abs(res.growth_minus - 1) < 1e-3


def test_symbol_leading_terms():
    # small theta: the discrete symbol approaches its continuum form
    kappa, r, f0, dr = 5.0, 2.0, 1.0, 1e-4
    continuum = -kappa**2 + 5j * kappa / r - 8j * kappa * r / (f0 + r * r)
    assert symbol("YM41", kappa, r, f0, dr) == pytest.approx(continuum, rel=1e-6)


def test_amplification_roots():
    for J in (-1e4 + 50j, -3.0, 2.5 - 1j):
        xp, xm = amplification(J, 1e-3)
        b = 2 + J * 1e-6
        for x in (xp, xm):
            assert abs(x * x - b * x + 1) < 1e-12
        assert abs(xp * xm - 1) < 1e-12


def test_von_neumann_checks():
    with pytest.raises(ValueError):
        von_neumann(VNQuery("YM41", 400.0, 1.0, 1.0, 0.01, 1e-4))
    with pytest.raises(ValueError):
        von_neumann(VNQuery("YM41", 1.0, 0.0, 1.0, 0.01, 1e-4))
    with pytest.raises(ValueError):
        symbol("CP1Q2", 1.0, 1.0, 1.0, 0.01)


def test_rescaling_by_five():
    base = eigenvalues(matrix("YM41")).eigenvalues.real
    scaled = eigenvalues(matrix("YM41", f0=25.0, v=-0.05, dr=0.05)).eigenvalues.real
    np.testing.assert_allclose(scaled, base / 25, rtol=1e-3)


def test_doubling_n_moves_smallest_toward_zero():
    five = eigenvalues(matrix("YM41")).eigenvalues.real
    ten = eigenvalues(matrix("YM41", n=10)).eigenvalues.real
    assert ten.max() > five.max()
    assert ten.max() == pytest.approx(-2158.0, rel=1e-3)
    assert five.max() == pytest.approx(-7316.6, rel=5e-4)


def test_ten_point_spectra():
    # ten-point tables are compared at 0.1%; two YM41 entries differ by 0.054%
    ym = [-79898, -42854, -39076, -34796, -29191, -22916, -16554, -10673, -5754, -2158]
    cp = [-43977.1, -39218.2, -35858.2, -31051.4, -25358.7, -19307.4, -13418.0, -8177.3, -4002.9, -1210.9]
    for model, ref in (("YM41", ym), ("CP1Q1", cp)):
        vals = eigenvalues(matrix(model, n=10)).eigenvalues.real
        np.testing.assert_allclose(vals, sorted(ref), rtol=1e-3)


def test_negative_spectrum_sweep():
    for model in ("YM41", "CP1Q1"):
        report = negative_spectrum_check(model, [0.5, 1.0, 5.0], [-0.1, 0.0], [0.01, 0.1], [5, 10])
        assert report.all_negative and not report.violations
        assert len(report.entries) == 24
    with pytest.raises(ValueError):
        negative_spectrum_check("YM41", [], [0.0], [0.1], [5])
