import numpy as np
import pytest

from tllverify.model import Polytope, TLLSpec


@pytest.fixture
def abs_spec():
    """max(x, -x) = |x|"""
    return TLLSpec([[1.0], [-1.0]], [0.0, 0.0], [[0], [1]])


@pytest.fixture
def negabs_spec():
    """min(x, -x) = -|x|"""
    return TLLSpec([[1.0], [-1.0]], [0.0, 0.0], [[0, 1]])


@pytest.fixture
def negabs_pair_spec():
    """-|x| with its selector set repeated, so it is the same size as |x|"""
    return TLLSpec([[1.0], [-1.0]], [0.0, 0.0], [[0, 1], [0, 1]])


@pytest.fixture
def interval():
    return Polytope.cube(1, 2.0)


def random_spec(rng, n, N, M, max_sel=None):
    W = rng.normal(size=(N, n))
    b = rng.normal(size=N)
    sels = []
    for _ in range(M):
        k = int(rng.integers(1, (max_sel or N) + 1))
        sels.append(sorted(rng.choice(N, size=min(k, N), replace=False).tolist()))
    return TLLSpec(W, b, sels)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
