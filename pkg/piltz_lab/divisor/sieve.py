"""
Segmented multiplicative sieve for the k-fold divisor function d_k.
"""
import logging
import math
from functools import lru_cache
from math import comb, isqrt

import numpy as np

from piltz_lab import config
from piltz_lab.errors import CapacityError, DomainError

logger = logging.getLogger(__name__)

# Headroom kept below 2^63 for both d_k values and running sums.
INT64_CAPACITY = 2**62
_MAX_EXPONENT = 63


def primes_up_to(limit: int) -> np.ndarray:
    """All primes <= limit, sieve of Eratosthenes on a boolean mask."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


@lru_cache(maxsize=8)
def _base_primes(limit: int) -> np.ndarray:
    primes = primes_up_to(limit)
    primes.setflags(write=False)
    return primes


@lru_cache(maxsize=None)
def binomial_table(k: int) -> np.ndarray:
    """table[a] = d_k(p^a) = binomial(a + k - 1, k - 1)."""
    table = np.array([comb(a + k - 1, k - 1) for a in range(_MAX_EXPONENT + 1)], dtype=np.int64)
    table.setflags(write=False)
    return table


def check_order(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    if k > config.MAX_K:
        raise DomainError(f"k = {k} exceeds the supported maximum {config.MAX_K}")


class DivisorBlock:
    """
    Exact d_k(n) for every n in [lo, hi).

    values[i] == d_k(lo + i); the array is read-only once built.
    """

    def __init__(self, k: int, lo: int, hi: int, values: np.ndarray):
        if len(values) != hi - lo:
            raise DomainError(f"expected {hi - lo} values for [{lo}, {hi}), got {len(values)}")
        values.setflags(write=False)
        self.k = k
        self.lo = lo
        self.hi = hi
        self.values = values

    def __len__(self):
        return self.hi - self.lo

    def __getitem__(self, n: int) -> int:
        if not self.lo <= n < self.hi:
            raise DomainError(f"{n} is outside the block [{self.lo}, {self.hi})")
        return int(self.values[n - self.lo])

    def total(self) -> int:
        """Σ d_k(n) over the block, as a Python int."""
        return int(self.values.sum(dtype=np.int64))

    def prefix_sums(self, offset: int = 0) -> np.ndarray:
        """offset + Σ_{lo <= m <= lo+i} d_k(m) for every i, as int64."""
        if offset + self.total() >= INT64_CAPACITY:
            raise CapacityError(f"running sum past {self.hi} exceeds the exact int64 range")
        return np.cumsum(self.values, dtype=np.int64) + np.int64(offset)

    def __repr__(self):
        return f"DivisorBlock(k={self.k}, lo={self.lo}, hi={self.hi})"


def divisor_block(k: int, lo: int, hi: int, block_size: int = None) -> DivisorBlock:
    """
    d_k on [lo, hi) by trial-dividing the segment with every prime p <= sqrt(hi).

    Each n is fully factored by strided division with p, p^2, ...; a cofactor
    > 1 left after all p <= sqrt(hi) is a single prime.
    """
    check_order(k)
    lo, hi = int(lo), int(hi)
    block_size = config.BLOCK_SIZE if block_size is None else block_size
    if lo < 1:
        raise DomainError(f"lo must be >= 1, got {lo}")
    if hi <= lo:
        raise DomainError(f"empty segment [{lo}, {hi})")
    if hi - lo > block_size:
        raise DomainError(f"segment length {hi - lo} exceeds the block size {block_size}")
    if hi >= INT64_CAPACITY:
        raise CapacityError(f"hi = {hi} is outside the int64 range")

    size = hi - lo
    table = binomial_table(k)
    log_table = np.log(table.astype(np.float64))
    remaining = np.arange(lo, hi, dtype=np.int64)
    values = np.ones(size, dtype=np.int64)
    log_shadow = np.zeros(size)
    exponents = np.zeros(size, dtype=np.int64)

    for p in _base_primes(isqrt(hi - 1)):
        p = int(p)
        first = (-lo) % p
        if first >= size:
            continue
        exponents[first::p] = 0
        power = p
        while power < hi:
            start = (-lo) % power
            if start >= size:
                break
            exponents[start::power] += 1
            remaining[start::power] //= p
            power *= p
        hits = exponents[first::p]
        values[first::p] *= table[hits]
        log_shadow[first::p] += log_table[hits]

    leftover = remaining > 1
    values[leftover] *= k
    log_shadow[leftover] += math.log(k)

    if size and log_shadow.max() > math.log(INT64_CAPACITY):
        raise CapacityError(f"d_{k} overflows int64 on [{lo}, {hi})")
    return DivisorBlock(k, lo, hi, values)


def iter_blocks(k: int, lo: int, hi: int, block_size: int = None):
    """Consecutive DivisorBlocks covering [lo, hi) in ascending order."""
    block_size = config.BLOCK_SIZE if block_size is None else block_size
    start = lo
    while start < hi:
        stop = min(start + block_size, hi)
        yield divisor_block(k, start, stop, block_size)
        start = stop


def range_sum(k: int, lo: int, hi: int, block_size: int = None) -> int:
    """Σ_{lo <= n < hi} d_k(n) exactly."""
    if hi <= lo:
        return 0
    return sum(block.total() for block in iter_blocks(k, lo, hi, block_size))


def range_values(k: int, lo: int, hi: int, block_size: int = None) -> np.ndarray:
    """d_k(n) for n in [lo, hi) as one int64 array."""
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([block.values for block in iter_blocks(k, lo, hi, block_size)])
