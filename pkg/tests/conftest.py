from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ricciframe.graph import generate, random_connected_graph

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def k2():
    return generate("complete", {"n": 2})


@pytest.fixture
def k3():
    return generate("complete", {"n": 3})


@pytest.fixture
def k4():
    return generate("complete", {"n": 4})


@pytest.fixture
def c4():
    return generate("cycle", {"n": 4})


@pytest.fixture
def c6():
    return generate("cycle", {"n": 6})


@pytest.fixture
def double_star():
    return generate("double_star", {"leaves": 2})


def connected_suite(count, n_range=(5, 20), p=0.4, seed=0, weights=None):
    """Seeded random connected graphs: spanning tree plus G(n, p)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        out.append(random_connected_graph(n, p, rng, weights=weights))
    return out


# PASS/FAIL lines recorded by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
