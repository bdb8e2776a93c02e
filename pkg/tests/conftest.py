import functools

import pytest

from soliton_collapse import SimConfig, InitialProfile, make_grid, run


@functools.lru_cache(maxsize=None)
def _cached_run(config):
    return run(config)


def simulate(model, f0, v0, dr, dt, t_end, r_max=100.0, snapshot_times=(), **extra):
    """Run once per distinct configuration for the whole session."""
    config = SimConfig(
        model=model,
        grid=make_grid(dr, r_max),
        dt=dt,
        v0=v0,
        profile=InitialProfile(f0=f0),
        t_end=t_end,
        snapshot_times=tuple(snapshot_times),
        **extra,
    )
    return _cached_run(config)


@pytest.fixture
def sim():
    return simulate


@pytest.fixture(scope="session")
def convergence_cache():
    """Probe results shared by every refinement study in the session."""
    return {}


# --- acceptance summary ------------------------------------------------------

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        ok = report.passed and not hasattr(report, "wasxfail")
        note = getattr(report, "wasxfail", "") or ("" if ok else report.outcome)
        _criteria.setdefault(mark.args[0], []).append((item.name, ok, note))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        checks = _criteria[number]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        failing = [f"{name} ({note})" for name, ok, note in checks if not ok]
        line = f"criterion {number}: {status} ({len(checks)} checks)"
        if failing:
            line += "; not met: " + "; ".join(failing)
        terminalreporter.write_line(line)
