import numpy as np
import pytest

from wormreg.geometry import WormConfig
from wormreg.operators import OdeCoefficients


@pytest.fixture
def worm():
    return WormConfig()


@pytest.fixture
def model():
    return OdeCoefficients(a=1.0, r=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    num = int(name.split("_")[2])
    detail = dict(report.user_properties).get("detail", "")
    _ACCEPTANCE[num] = ("PASS" if report.passed else "FAIL", detail)


_ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {detail}")
