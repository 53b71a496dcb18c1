"""
Tests for the near-integer counts of (μ^(1/k) + α)^k.
"""
import math

import mpmath
import pytest

from piltz_lab import gap_count
from piltz_lab.errors import DomainError, PrecisionError
from piltz_lab.gap_count import (
    bound_value,
    count_near_integers,
    difference_alphas,
    lemma_ratio_sweep,
    log_uniform_alphas,
)


def mp_count(k, W, alpha, rho):
    with mpmath.workdps(50):
        total = 0
        for mu in range(W + 1, 2 * W + 1):
            y = (mpmath.root(mu, k) + mpmath.mpf(alpha)) ** k
            if abs(y - mpmath.nint(y)) <= rho:
                total += 1
        return total


def test_half_width_counts_everything():
    result = count_near_integers(3, 1000, 0.7, 0.5)
    assert result.count == 1000
    assert result.uncertain == 0


@pytest.mark.parametrize("k, W, alpha, rho", [(3, 10, 1.0, 0.05), (2, 500, 0.37, 0.1), (4, 2000, 1.5, 0.02)])
def test_matches_high_precision(k, W, alpha, rho):
    result = count_near_integers(k, W, alpha, rho)
    assert result.count == mp_count(k, W, alpha, rho)
    assert result.uncertain == 0
    assert result.error_bound < 1e-20


def test_perfect_squares_are_counted():
    # (√μ + 1)² is an integer whenever μ is a square
    W = 5000
    squares = sum(1 for r in range(1, 200) if W < r * r <= 2 * W)
    assert count_near_integers(2, W, 1.0, 1e-12).count >= squares


def test_count_is_monotone_in_rho():
    counts = [count_near_integers(3, 3000, 2.3, rho).count for rho in (0.01, 0.05, 0.2, 0.5)]
    assert counts == sorted(counts)
    assert counts[-1] == 3000


def test_bound_and_ratio():
    result = count_near_integers(3, 1000, 1.0, 0.1)
    expected = 1000 * 0.1 + 1000 ** (2 / 3 - 1 / 9) + 1000 ** (2 / 3)
    assert result.bound_value == pytest.approx(expected)
    assert bound_value(3, 1000, 1.0, 0.1) == result.bound_value
    assert result.ratio == result.count / result.bound_value


@pytest.mark.parametrize(
    "k, W, alpha, rho",
    [
        (3, 0, 1.0, 0.1),
        (3, 10**9 + 1, 1.0, 0.1),
        (3, 1000, 0.0, 0.1),
        (3, 1000, 4 * 10 + 0.01, 0.1),
        (3, 1000, 1.0, 0.0),
        (3, 1000, 1.0, 0.6),
        (7, 1000, 1.0, 0.1),
    ],
)
def test_domain(k, W, alpha, rho):
    with pytest.raises(DomainError):
        count_near_integers(k, W, alpha, rho)


def test_precision_guard(monkeypatch):
    monkeypatch.setattr(gap_count, "CERTIFIED_DISTANCE", 1e-30)
    with pytest.raises(PrecisionError):
        count_near_integers(3, 1000, 1.0, 0.1)


def test_difference_alphas():
    assert difference_alphas(3, [(8, 27)]) == [1.0]
    (alpha,) = difference_alphas(2, [(2, 3)])
    assert alpha == pytest.approx(math.sqrt(3) - math.sqrt(2), rel=1e-15)
    with pytest.raises(DomainError):
        difference_alphas(2, [(3, 3)])


def test_log_uniform_alphas():
    alphas = log_uniform_alphas(3, 10**6, draws=50, seed=4)
    assert alphas == sorted(alphas)
    assert all(10**-3 < a < 100 for a in alphas)
    assert alphas == log_uniform_alphas(3, 10**6, draws=50, seed=4)


def test_sweep():
    result = lemma_ratio_sweep(3, [1000, 2000], lambda W: log_uniform_alphas(3, W, draws=3), [0.01, 0.1])
    assert len(result.rows) == 2 * 3 * 2
    assert result.max_ratio == max(r.ratio for r in result.rows)
    frame = result.frame()
    assert list(frame.columns) == ["k", "W", "alpha", "rho", "count", "bound", "ratio", "uncertain"]
    assert frame["uncertain"].dtype == bool


def test_empty_sweep():
    with pytest.raises(DomainError):
        lemma_ratio_sweep(3, [], [1.0], [0.1])


@pytest.mark.slow
def test_default_sweep_stays_within_constant():
    result = lemma_ratio_sweep(3, [10**4, 10**5], lambda W: log_uniform_alphas(3, W, draws=16), [1e-3, 1e-2])
    assert len(result.rows) == 2 * 16 * 2
    assert result.uncertain == 0
    assert all(row.count <= 50 * row.bound_value for row in result.rows)
