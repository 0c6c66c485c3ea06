from fractions import Fraction
from math import factorial

import numpy as np
import pytest

from balanced_bundles.geometry import build_quadrature

ACCEPTANCE_LINES: list[str] = []


def beta_oracle(a: int, b: int) -> Fraction:
    """(1/V) int |z0|^{2a}|z1|^{2b}/|z|^{2(a+b)} omega_FS, exact."""
    return Fraction(factorial(a) * factorial(b), factorial(a + b + 1))


@pytest.fixture(scope="session")
def scheme16():
    return build_quadrature(16, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_chart_points(rng, n, radius=2.0):
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, n))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
