import numpy as np
import pytest

from charfun_kit.tuples import profile_of, section7_tuple

# acceptance criteria outcomes, filled in by test_acceptance.py reports
_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def s7():
    return section7_tuple()


@pytest.fixture(scope="session")
def s7_profile(s7):
    return profile_of(s7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed:
        prev = _ACCEPTANCE.get(name)
        _ACCEPTANCE[name] = "FAIL" if report.failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("_")[2])):
        num = int(name.split("_")[2])
        label = " ".join(name.split("_")[3:])
        terminalreporter.write_line(f"criterion {num:2d} [{label}]: {_ACCEPTANCE[name]}")
