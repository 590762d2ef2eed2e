from __future__ import annotations

import numpy as np
import pytest

from dyncorr.series import ParameterSeries

ACCEPTANCE_LINES: list[str] = []


def random_series(rng: np.random.Generator, n_periods: int, n_params: int, origin: int = 1) -> ParameterSeries:
    values = rng.normal(100.0, 15.0, size=(n_periods, n_params))
    return ParameterSeries(tuple(f"p{j}" for j in range(n_params)), values, origin)


@pytest.fixture
def rng():
    return np.random.default_rng(20201)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
