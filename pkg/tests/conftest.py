import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pvtrack import BusParams, EnvSample, reference_panel  # noqa: E402


@pytest.fixture(scope="session")
def panel():
    return reference_panel()


@pytest.fixture(scope="session")
def bus():
    return BusParams(v_l=60.0)


@pytest.fixture
def stc():
    return EnvSample(1000.0, 25.0)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    if report.when == "call" or report.outcome == "failed":
        prev = _ACCEPTANCE.get(marker, "passed")
        _ACCEPTANCE[marker] = "failed" if "failed" in (prev, report.outcome) else report.outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        outcome.get_result().acceptance = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), outcome in sorted(_ACCEPTANCE.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num}: {title}")
