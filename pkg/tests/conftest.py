import numpy as np
import pytest

from eventum.reduction import ReductionFamily

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def cat():
    return ReductionFamily.from_operators([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


def weak_qubit_family(theta):
    return ReductionFamily.from_operators([np.diag([np.cos(theta), 1.0]), np.diag([np.sin(theta), 0.0])])


@pytest.fixture
def weak():
    return weak_qubit_family(np.pi / 6)
