import numpy as np
import pytest
from hypothesis import settings

from fracschrod import FractionalOperator, GroupStructure, Mollifier
from fracschrod.fields import Grid, sample_gaussian

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def grid1d():
    # L=10, N=1024: the delta net is resolvable down to eps ~ 0.04
    return Grid((10.0,), (1024,))


@pytest.fixture(scope="session")
def op1(grid1d):
    return FractionalOperator(grid1d, 1.0)


@pytest.fixture(scope="session")
def bump1():
    return Mollifier(GroupStructure.abelian(1))


@pytest.fixture(scope="session")
def gauss1(grid1d):
    return sample_gaussian(grid1d)


def smooth_well(x, amplitude=5.0, radius=2.0):
    y = 1.0 - (x / radius) ** 2
    inside = y > 0
    return np.where(inside, amplitude * np.exp(1.0 - 1.0 / np.where(inside, y, 1.0)), 0.0)
