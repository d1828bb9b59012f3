import numpy as np
import pytest

from rwre.environment import dirichlet_law, uniform_law
from rwre.group_tree import GeneratorSet


@pytest.fixture
def gs4():
    return GeneratorSet(2, 0)


@pytest.fixture
def gs3():
    return GeneratorSet(1, 1)


@pytest.fixture
def dirichlet4():
    return dirichlet_law([1, 1, 1, 1], 0.1)


@pytest.fixture
def uniform4():
    return uniform_law(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def binomial_ok(count, n, p, k=3.0):
    """count within k standard deviations of n p."""
    return abs(count - n * p) <= k * np.sqrt(n * p * (1 - p))


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
