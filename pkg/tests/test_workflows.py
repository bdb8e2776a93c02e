import numpy as np
import pytest

from soliton_collapse import SimulationResult, StopReason
from soliton_collapse.fitting import FitError
from soliton_collapse.workflows import (
    asymptote_line,
    bump_points,
    c_R_from_run,
    conic_series,
    cutoff_speed_law,
    ellipse_laws,
    origin_line,
    origin_parabola,
)
from soliton_collapse.predictions import trajectory_q1

R = np.arange(0, 1001) * 0.1


def ellipse_slice(t, v0=-0.01, f0=1.0):
    a, b, k = t, 2.5e-5 * t * t, f0 + v0 * t
    inside = np.clip(1 - R**2 / a**2, 0, None)
    return k + b * np.sqrt(inside)


def hyperbola_slice(t):
    a, b, k = 2.0 + t, 0.02 + 0.001 * t, 1.0 - 0.01 * t
    return k + 5 * b - b * np.sqrt(1 + R**2 / a**2)


def test_bump_points_keeps_origin_and_bump():
    f = ellipse_slice(20.0)
    x, y = bump_points(R, f, 0.05)
    assert x[0] == 0.0 and x.max() < 20.0
    assert np.all(y - f[-2] > 0.05 * (f[0] - f[-2])) or x.size == 1


def test_ellipse_laws_on_exact_slices():
    snaps = [(t, ellipse_slice(t)) for t in np.arange(5.0, 120.0, 1.0)]
    series = conic_series(R, snaps, "ellipse")
    laws = ellipse_laws(series, 100.0)
    assert laws.m_a == pytest.approx(1.0, rel=1e-3)
    assert laws.c == pytest.approx(2.5e-5, rel=1e-3)
    assert laws.m_k == pytest.approx(-0.01, rel=1e-3)
    assert laws.b_k == pytest.approx(1.0, rel=1e-3)
    # slices from t = 10 until the semi-axis reaches r = 100 (t = 100 sits on the edge)
    assert laws.samples in (90, 91)


def test_asymptote_line_on_exact_slices():
    snaps = [(t, hyperbola_slice(t)) for t in np.arange(5.0, 60.0, 1.0)]
    series = conic_series(R, snaps, "hyperbola")
    assert not series.skipped
    np.testing.assert_allclose(series.slope, -(0.02 + 0.001 * series.times) / (2 + series.times), rtol=1e-6)
    line = asymptote_line(series, 5.0, 60.0)
    assert line.rms < 1e-3


def test_conic_series_skips_unfittable_slices():
    flat = np.ones_like(R)
    series = conic_series(R, [(1.0, flat), (20.0, ellipse_slice(20.0))], "ellipse")
    assert series.skipped == [1.0] and series.times.tolist() == [20.0]
    with pytest.raises(ValueError):
        conic_series(R, [], "parabola")


def test_ellipse_laws_need_slices():
    series = conic_series(R, [(20.0, ellipse_slice(20.0))], "ellipse")
    with pytest.raises(FitError):
        ellipse_laws(series, 100.0)


def fake_result(times, origin, reason):
    return SimulationResult(times=np.asarray(times), origin=np.asarray(origin), stop_reason=reason)


def test_origin_fits_on_synthetic_traces():
    t = np.linspace(0, 180, 1801)
    res = fake_result(t, 2.5e-5 * (t - 200) ** 2, StopReason.REACHED_T_END)
    par = origin_parabola(res)
    assert (par.a, par.T) == pytest.approx((2.5e-5, 200.0), rel=1e-9)
    line = origin_line(fake_result(t, 1 - 0.005 * t, StopReason.ORIGIN_BELOW_THRESHOLD))
    assert line.line.m == pytest.approx(-0.005) and line.collapse_time == 180.0
    assert np.isnan(origin_line(res).collapse_time)


def test_c_R_from_synthetic_run():
    t = np.arange(0.0, 110.0, 0.01)
    traj = trajectory_q1(1.0, 0.027, 70.0, t)
    c, R_eff, _ = c_R_from_run(fake_result(t, traj.f, StopReason.REACHED_T_END))
    assert c == pytest.approx(0.027, rel=0.01) and R_eff == pytest.approx(70.0, rel=0.01)


def test_cutoff_speed_law_exact():
    v0 = np.array([-0.01, -0.02, -0.04, -0.05])
    law = cutoff_speed_law(v0, 3.0 * (1 / np.abs(v0)) ** 2 - 2.0 / np.abs(v0) + 1.0)
    assert (law.c2, law.c1, law.c0) == pytest.approx((3.0, -2.0, 1.0), rel=1e-9)
    with pytest.raises(FitError):
        cutoff_speed_law([-0.01, -0.02], [1.0, 2.0])


def test_cutoff_speed_law_from_published_table():
    # reported table values are rounded, so the refit is compared loosely
    law = cutoff_speed_law([-0.01, -0.02, -0.03, -0.05, -0.06], [53, 34, 25, 17, 15])
    assert law.c2 == pytest.approx(-0.00237878, rel=0.1)
    assert law.c1 == pytest.approx(0.73551687, rel=0.1)
    assert law.c0 == pytest.approx(3.23010905, rel=0.1)
