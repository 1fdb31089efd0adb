import math

import numpy as np
import pytest

from uniqcert.grid import GridDomain
from uniqcert.laplacian import build_laplacian

EXAMPLE_F = "(1 - 1/(x^2+y^2+z^2)) * (10*u - 1)"


def example_f(c=10):
    return f"(1 - 1/(x^2+y^2+z^2)) * ({c}*u - 1)"


def fd_eigenvalue(counts, lower=None, upper=None):
    """Closed-form smallest eigenvalue of the FD Dirichlet Laplacian,
    computed independently of the package."""
    lower = lower or [0.0] * len(counts)
    upper = upper or [1.0] * len(counts)
    total = 0.0
    for lo, hi, c in zip(lower, upper, counts):
        h = (hi - lo) / (c + 1)
        total += 4.0 / h**2 * math.sin(math.pi * h / (2 * (hi - lo))) ** 2
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line3():
    return GridDomain.box([0.0], [1.0], 3)


@pytest.fixture
def cube7():
    return GridDomain.box([1.0] * 3, [2.0] * 3, 7)


@pytest.fixture
def cube7_op(cube7):
    return build_laplacian(cube7)


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
