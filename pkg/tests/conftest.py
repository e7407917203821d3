import numpy as np
import pytest

import zkrect as z

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_domain():
    return z.RectDomain(1.0, 1.0, 17, 17)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
