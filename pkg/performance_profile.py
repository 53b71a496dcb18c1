import cProfile
import pstats
import time

from piltz_lab.delta import DeltaEvaluator
from piltz_lab.divisor.sieve import range_sum

# --- Profile Setup ---
K = 3
BLOCKS = 10
BLOCK = 2**20
START = 10**8


def profile_sieve():
    """Profiles the d_k sieve and reports throughput in values per second."""
    with cProfile.Profile() as pr:
        started = time.perf_counter()
        for i in range(BLOCKS):
            lo = START + i * BLOCK
            range_sum(K, lo, lo + BLOCK, BLOCK)
        elapsed = time.perf_counter() - started

    print(f"d_{K}: {BLOCKS * BLOCK / elapsed:.3g} values/s on one core")
    stats = pstats.Stats(pr)
    stats.sort_stats(pstats.SortKey.TIME)
    stats.print_stats(10)


def profile_segment(cache_dir="./.piltz_cache"):
    """Profiles exact Δ_k evaluation over one block."""
    evaluator = DeltaEvaluator.covering(K, 10**6 + BLOCK, stride=10**6, cache_dir=cache_dir)
    with cProfile.Profile() as pr:
        evaluator.segment(10**6, 10**6 + BLOCK)

    stats = pstats.Stats(pr)
    stats.sort_stats(pstats.SortKey.TIME)
    stats.print_stats(10)


if __name__ == "__main__":
    profile_sieve()
    profile_segment()
