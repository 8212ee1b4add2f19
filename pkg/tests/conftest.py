import numpy as np
import pytest

ACCEPTANCE_LINES = []


def low_rank(rng, m, n, r):
    return rng.standard_normal((m, r)) @ rng.standard_normal((r, n))


def random_instances(seed, count, max_dim=30):
    """``count`` random matrices with random shape and rank."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(2, max_dim + 1))
        n = int(rng.integers(2, max_dim + 1))
        r = int(rng.integers(1, min(m, n) + 1))
        out.append(low_rank(rng, m, n, r))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
