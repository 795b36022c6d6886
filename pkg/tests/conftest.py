import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

TWO_PI = 2 * math.pi


def series_bessel(n: int, x: float) -> float:
    """Independent oracle: power series of J_n(x) summed with exact factorials."""
    n_abs = abs(n)
    total, k = 0.0, 0
    while True:
        term = (-1) ** k * (x / 2) ** (2 * k + n_abs) / (math.factorial(k) * math.factorial(k + n_abs))
        total += term
        if k > x and abs(term) < 1e-18 * max(1.0, abs(total)):
            break
        k += 1
    return total * ((-1) ** n_abs if n < 0 else 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
