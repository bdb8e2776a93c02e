"""Longer reproductions of published collapse laws beyond the acceptance set."""

import numpy as np
import pytest
from conftest import simulate

from soliton_collapse import make_grid
from soliton_collapse.workflows import (
    asymptote_line,
    conic_series,
    ellipse_laws,
    origin_line,
    origin_parabola,
)

pytestmark = pytest.mark.slow


def test_ym41_vertex_on_fine_grid():
    # companion of the coarse-grid vertex check: at dr=0.01 the printed row is met
    fit = origin_parabola(simulate("YM41", 1.0, -0.01, 0.01, 0.005, 300.0))
    assert fit.a == pytest.approx(2.501e-5, rel=0.02)
    assert fit.T == pytest.approx(200.1, rel=0.01)


def test_cp1q1_origin_line():
    result = simulate("CP1Q1", 1.0, -0.01, 0.01, 0.001, 150.0)
    line = origin_line(result)
    assert line.collapse_time == pytest.approx(113.0, rel=0.01)
    assert line.line.m == pytest.approx(-0.00815, rel=0.1)


def test_ym41_ellipse_laws():
    snaps = np.arange(2.0, 100.0, 1.0)
    result = simulate("YM41", 4.0, -0.01, 0.1, 0.005, 100.0, snapshot_times=snaps)
    r = make_grid(0.1, 100.0).radii
    laws = ellipse_laws(conic_series(r, result.snapshots, "ellipse", 0.05), r_max=100.0, t_start=10.0)
    # the published k line has the opposite sign convention
    assert abs(laws.m_k) == pytest.approx(0.0100, rel=0.01)
    assert laws.b_k == pytest.approx(4.0, rel=0.01)
    assert laws.m_a == pytest.approx(1.001, rel=0.1)
    assert laws.c == pytest.approx(6.26e-6, rel=0.1)


def hyperbola_line(f0, v0):
    t_end = min(100.0, 1.1 * f0 / abs(v0))
    snaps = np.arange(5.0, t_end, 0.5)
    result = simulate("CP1Q1", f0, v0, 0.1, 0.005, t_end, snapshot_times=snaps)
    r = make_grid(0.1, 100.0).radii
    return asymptote_line(conic_series(r, result.snapshots, "hyperbola"))


@pytest.mark.parametrize("f0,v0,m", [(1.0, -0.01, -1.03e-5), (2.0, -0.01, -5.16e-6),
                                     (1.0, -0.02, -4.36e-5), (1.0, -0.03, -1.0e-4)])
def test_hyperbola_asymptote_slope(f0, v0, m):
    assert hyperbola_line(f0, v0).m == pytest.approx(m, rel=0.1)


@pytest.mark.parametrize("f0,v0,b_i", [(1.0, -0.02, -4.26e-4), (1.0, -0.03, -9.16e-4)])
def test_hyperbola_asymptote_intercept(f0, v0, b_i):
    assert hyperbola_line(f0, v0).b == pytest.approx(b_i, rel=0.1)


@pytest.mark.xfail(strict=True, reason="intercepts of the slow runs sit 17-19% above the printed values")
@pytest.mark.parametrize("f0,b_i", [(1.0, -1.09e-4), (2.0, -1.08e-4)])
def test_hyperbola_asymptote_intercept_slow_runs(f0, b_i):
    assert hyperbola_line(f0, -0.01).b == pytest.approx(b_i, rel=0.1)
