"""
Shared fixtures: every test builds its checkpoints in a private cache with a
small stride, so checkpoint cells and block edges are crossed often.
"""
import numpy as np
import pytest

from piltz_lab.delta import DeltaEvaluator

SMALL_STRIDE = 500
SMALL_BLOCK = 2048


@pytest.fixture
def cache_dir(tmp_path):
    return str(tmp_path / "cache")


@pytest.fixture
def make_evaluator(cache_dir):
    def make(k, need, stride=SMALL_STRIDE, block_size=SMALL_BLOCK, **kwargs):
        return DeltaEvaluator.covering(k, need, stride=stride, cache_dir=cache_dir, block_size=block_size, **kwargs)

    return make


def divisor_table(k: int, limit: int) -> np.ndarray:
    """d_k(0..limit) by repeated Dirichlet convolution with 1 (entry 0 is 0)."""
    current = np.ones(limit + 1, dtype=np.int64)
    current[0] = 0
    for _ in range(k - 1):
        nxt = np.zeros(limit + 1, dtype=np.int64)
        for d in range(1, limit + 1):
            nxt[d::d] += current[1 : limit // d + 1]
        current = nxt
    return current


def summatory_table(k: int, limit: int) -> np.ndarray:
    return np.cumsum(divisor_table(k, limit))


def hyperbola_summatory(k: int, x: int, lower) -> int:
    """S_k(x) = Σ_{d <= x} S_{k-1}(floor(x / d)), with lower = S_{k-1} table."""
    return int(sum(int(lower[x // d]) for d in range(1, x + 1)))
