import math

import pytest

from blackstart.profiles import SystemParams
from blackstart.transformer import CoreParams

# acceptance results collected for the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def params():
    return SystemParams.from_ratings()


@pytest.fixture(scope="session")
def lam0(params):
    return params.lambda0


@pytest.fixture(scope="session")
def core(lam0):
    return CoreParams.calibrated(lam0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def close(a, b, tol):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)
