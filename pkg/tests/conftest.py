import math
import warnings

import numpy as np
import pytest

from hdgflow import physics as ph


def random_states(rng, n, gamma=1.4, mach_max=3.0):
    """Admissible conservative states with random density, speed, direction and pressure."""
    rho = rng.uniform(0.2, 3.0, n)
    p = rng.uniform(0.1, 3.0, n)
    c = np.sqrt(gamma * p / rho)
    speed = rng.uniform(0.0, mach_max, n) * c
    ang = rng.uniform(0, 2 * math.pi, n)
    v = np.stack([speed * np.cos(ang), speed * np.sin(ang)], axis=-1)
    return ph.conservative(rho, v, p, gamma)


def random_normals(rng, n):
    ang = rng.uniform(0, 2 * math.pi, n)
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _quiet_threshold_warnings():
    from hdgflow.errors import DegenerateThresholds
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateThresholds)
        yield


# -- acceptance summary ------------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    n = getattr(report, "criterion", None)
    if n is None:
        return
    _CRITERIA.setdefault(n, []).append((report.nodeid, report.passed))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        rep.criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        failed = [nid.split("::")[-1] for nid, ok in results if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"criterion {n:2d}: {status} ({len(results) - len(failed)}/{len(results)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        terminalreporter.write_line(line)
