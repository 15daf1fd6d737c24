from __future__ import annotations

import numpy as np
import pytest
from scipy import special, stats

from infoflow import QuantileDensity, derive_params
from infoflow.cli import make_initial
from infoflow.quantile import mass_grid

# lines printed by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def gaussian_state(n: int, variance: float = 1.0, mean: float = 0.0) -> QuantileDensity:
    return QuantileDensity(mean + np.sqrt(variance) * stats.norm.ppf(mass_grid(n)))


def parabola_state(n: int) -> QuantileDensity:
    """Quantiles of (3/4)(1 - x^2)_+."""
    c = 2 * mass_grid(n) - 1
    return QuantileDensity(np.sign(c) * np.sqrt(special.betaincinv(0.5, 2.0, np.abs(c))))


def random_state(rng: np.random.Generator, n: int, spread: float = 1.0) -> QuantileDensity:
    gaps = rng.uniform(0.3, 1.7, n - 1)
    x = np.concatenate([[0.0], np.cumsum(gaps)])
    x = (x - x.mean()) / (x[-1] - x[0]) * 4 * spread
    return QuantileDensity(x)


@pytest.fixture
def double_bump_200():
    return make_initial({"kind": "double_bump"}, 200, derive_params(0.75, 1.0))
