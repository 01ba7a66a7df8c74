import math
from collections import OrderedDict

import pytest

from echomem.echo import FieldSchedule, Pulse, simulate_storage
from echomem.spectral import CombSpec, VoltPerWidthCalibration, make_comb, make_single_line

DELTA = 2.78e6
FINESSE = 2.6


@pytest.fixture(scope="session")
def ref_comb_spec():
    return CombSpec.from_finesse(DELTA, FINESSE, 0.5, 1.5, 15)


@pytest.fixture(scope="session")
def ref_comb(ref_comb_spec):
    return make_comb(ref_comb_spec, window_width=60e6, grid_points=2048)


@pytest.fixture(scope="session")
def afc_result(ref_comb):
    return simulate_storage(ref_comb, Pulse(0.0, 100e-9, 0.5), resolution=1e-9, t_end=1e-6)


def crib_setup(d_br, d0=0.0, b=100.0, tau=400e-9, fwhm=100e-9, u2=None):
    """Narrow Gaussian line broadened to four pulse bandwidths by a +U/-U field."""
    pulse = Pulse(0.0, fwhm, 1.0)
    s = 4 * pulse.spectral_fwhm
    g0 = s / (b - 1)
    d = d_br * s / (g0 * math.sqrt(math.pi / (4 * math.log(2))))
    win = 1.6 * s + 10 * g0
    n = int(2 ** math.ceil(math.log2(win / (g0 / 8))))
    profile = make_single_line(g0, d, d0, window_width=win, grid_points=n)
    cal = VoltPerWidthCalibration(70.0, b)
    sched = FieldSchedule.crib(70.0, tau, u2=u2, calib=cal, t_on=-1e-6, t_off=2e-6)
    return profile, pulse, sched, g0


@pytest.fixture(scope="session")
def crib_result():
    profile, pulse, sched, g0 = crib_setup(1.0)
    res = simulate_storage(profile, pulse, sched, resolution=min(1e-9, 1 / (10 * profile.width)), t_end=1.2e-6)
    return res, profile, pulse, sched, g0


# one PASS/FAIL line per acceptance criterion in the terminal summary
_CRITERIA = OrderedDict()


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            key, title = mark.args
            _CRITERIA.setdefault(key, {"title": title, "failed": [], "passed": 0})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or _CRITERIA.get(mark.args[0]) is None:
        return
    entry = _CRITERIA[mark.args[0]]
    if rep.failed:
        entry["failed"].append(item.name)
    elif rep.when == "call" and rep.passed:
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key, entry in _CRITERIA.items():
        if entry["failed"]:
            status = "FAIL"
        elif entry["passed"]:
            status = "PASS"
        else:
            status = "NOT RUN"
        terminalreporter.write_line(f"{key:>4} {status:<7} {entry['title']}")
