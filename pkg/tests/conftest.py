from __future__ import annotations

import numpy as np
import pytest

from sphardy.continuation import generate_pair
from sphardy.locality import build_context

THETA_C = np.pi / 3


@pytest.fixture(scope="session")
def ctx24():
    return build_context(THETA_C, 24, 16, 1e-6)


@pytest.fixture(scope="session")
def ctx12():
    return build_context(THETA_C, 12, 8, 1e-6)


@pytest.fixture(scope="session")
def pairs24(ctx24):
    return [generate_pair(ctx24, seed) for seed in range(20)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
