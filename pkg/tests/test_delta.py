"""
Tests for Δ_k evaluation, streaming and sign-change counting.
"""
import math

import mpmath
import numpy as np
import pytest

from conftest import divisor_table, summatory_table
from piltz_lab.delta import (
    count_sign_changes,
    delta_at,
    delta_extremes,
    delta_sample,
    delta_star,
    delta_stream,
    traversal,
)
from piltz_lab.errors import CoverageError, DomainError


def delta_2(x, S):
    """Δ_2 from a summatory table, main term in mpmath."""
    with mpmath.workdps(40):
        y = mpmath.mpf(x)
        return float(int(S[math.floor(x)]) - y * (mpmath.log(y) + 2 * mpmath.euler - 1))


def test_k1_is_minus_fractional_part(make_evaluator):
    evaluator = make_evaluator(1, 100)
    assert delta_at(1, 7.25, evaluator=evaluator) == pytest.approx(-0.25, abs=1e-15)
    assert delta_at(1, 7, evaluator=evaluator) == 0.0
    assert delta_at(1, 7, "left", evaluator) == -1.0
    assert delta_at(1, 7, "midpoint", evaluator) == -0.5
    assert delta_star(1, 5, evaluator) == -0.5


def test_sample_side_only_applies_at_integers(make_evaluator):
    evaluator = make_evaluator(1, 100)
    assert delta_sample(1, 3.5, "left", evaluator).side == "right"
    sample = delta_sample(1, 3, "left", evaluator)
    assert (sample.side, sample.value) == ("left", -1.0)


def test_delta_star_needs_integer(make_evaluator):
    with pytest.raises(DomainError):
        delta_star(2, 3.5, make_evaluator(2, 10))


def test_k2_against_direct_oracle(make_evaluator):
    S = summatory_table(2, 3000)
    evaluator = make_evaluator(2, 3000)
    rng = np.random.default_rng(7)
    for x in np.concatenate([rng.uniform(1, 2999, 40), [1.0, 499.0, 500.0, 501.0, 1000.5]]):
        assert evaluator.value(float(x)) == pytest.approx(delta_2(x, S), abs=1e-9)


def test_values_at_agrees_with_pointwise(make_evaluator):
    evaluator = make_evaluator(3, 4000)
    points = np.sort(np.random.default_rng(3).uniform(1, 4000, 200))
    batch = evaluator.values_at(points)
    single = [evaluator.value(float(x)) for x in points]
    np.testing.assert_allclose(batch, single, rtol=0, atol=1e-9)


def test_result_is_independent_of_stride_and_block(make_evaluator):
    points = np.linspace(10.5, 2990.5, 97)
    small = make_evaluator(3, 3000)
    other = make_evaluator(3, 3000, stride=1000, block_size=700)
    np.testing.assert_allclose(small.values_at(points), other.values_at(points), rtol=0, atol=1e-11)


def test_segment_limits(make_evaluator):
    evaluator = make_evaluator(2, 1000)
    S = summatory_table(2, 1000)
    d = divisor_table(2, 1000)
    seg = evaluator.segment(600, 700)
    np.testing.assert_array_equal(seg.S, S[600:701])
    np.testing.assert_array_equal(seg.d, d[600:701])
    # left limit at n equals right limit minus the jump d_k(n)
    assert seg.left[10] == pytest.approx(delta_2(609.999999999, S), abs=1e-6)
    assert seg.right[10] == pytest.approx(delta_2(610, S), abs=1e-9)


def test_window_extrema_brute_force(make_evaluator):
    seg = make_evaluator(2, 1000).segment(100, 400)
    first = np.array([101, 150, 200, 399])
    count = np.array([5, 0, 37, 2])
    top, bottom = seg.window_extrema(first, count)
    for i, (f, c) in enumerate(zip(first, count)):
        window = slice(f - 100, f - 100 + c)
        if c == 0:
            assert top[i] == -np.inf and bottom[i] == np.inf
        else:
            assert top[i] == seg.base[window].max()
            assert bottom[i] == seg.left[window].min()


def test_coverage_and_domain(make_evaluator):
    evaluator = make_evaluator(2, 1000)
    with pytest.raises(CoverageError):
        evaluator.value(evaluator.coverage + 1)
    with pytest.raises(DomainError):
        evaluator.value(0.5)
    with pytest.raises(CoverageError):
        evaluator.values_at([2.0, evaluator.coverage + 5.0])


def test_stream_visits_every_unit(make_evaluator):
    evaluator = make_evaluator(3, 2000)
    seen = []
    summary = delta_stream(3, 100.5, 900, emit=lambda n, s, d: seen.append((n, s, d)), evaluator=evaluator)
    S = summatory_table(3, 2000)
    d = divisor_table(3, 2000)
    assert [n for n, _, _ in seen] == list(range(100, 1001))
    assert all(s == S[n] and dk == d[n] for n, s, dk in seen)
    assert summary.units == len(seen)
    assert summary.d_total == int(S[1000] - S[100])


def _brute_sign_changes(S, d, lo, hi):
    values = [delta_2(lo, S)]
    for m in range(math.floor(lo) + 1, math.floor(hi) + 1):
        values.append(delta_2(m, S) - d[m])
        values.append(delta_2(m, S))
    values.append(delta_2(hi, S))
    signs = [v > 0 for v in values if v != 0]
    return sum(a != b for a, b in zip(signs, signs[1:]))


def test_sign_changes_match_brute_force(make_evaluator):
    S = summatory_table(2, 3000)
    d = divisor_table(2, 3000)
    evaluator = make_evaluator(2, 3000)
    for lo, hi in [(10, 300), (480, 1530.5), (2000.25, 2999)]:
        assert count_sign_changes(2, lo, hi, evaluator) == _brute_sign_changes(S, d, lo, hi)


def test_k1_has_no_sign_changes(make_evaluator):
    assert count_sign_changes(1, 10, 900, make_evaluator(1, 900)) == 0


def test_sign_changes_domain(make_evaluator):
    evaluator = make_evaluator(2, 100)
    with pytest.raises(DomainError):
        count_sign_changes(2, 5, 50, evaluator)
    with pytest.raises(DomainError):
        count_sign_changes(2, 50, 50, evaluator)


def test_traversal_open_end(make_evaluator):
    seg = make_evaluator(2, 100).segment(20, 31)
    xs, values = traversal(seg, 20.5, 30, closed=False)
    assert xs[-1] == 30 and values[-1] == seg.left[10]
    xs, values = traversal(seg, 20.5, 30, closed=True)
    assert values[-1] == seg.base[10]
    assert len(xs) == 2 + 2 * 10


def test_extremes(make_evaluator):
    S = summatory_table(2, 3000)
    evaluator = make_evaluator(2, 3000)
    result = delta_extremes(2, 1000, 1500, evaluator)
    assert 1000 <= result.argmax <= 2500
    assert result.exponent == 0.25
    x = result.argmax
    limits = [abs(delta_2(x, S)) / x**0.25]
    if x == math.floor(x):
        limits.append(abs(delta_2(x, S) - divisor_table(2, 3000)[int(x)]) / x**0.25)
    assert any(v == pytest.approx(result.max_normalized, rel=1e-6) for v in limits)
    for y in np.linspace(1000, 2500, 301):
        assert abs(delta_2(y, S)) / y**0.25 <= result.max_normalized + 1e-9
    assert 0 < result.max_log_ratio < 1
    assert result.reference_exponents["k3_pointwise_bound"] == 43 / 96


def _divisor_count(k, n):
    """d_k(n) from the prime factorisation of n by trial division."""
    total, p = 1, 2
    while p * p <= n:
        a = 0
        while n % p == 0:
            n //= p
            a += 1
        total *= math.comb(a + k - 1, k - 1)
        p += 1
    return total * (k if n > 1 else 1)


@pytest.mark.parametrize(
    "k, limit",
    [(3, 10**5), (2, 10**5), pytest.param(3, 10**7, marks=pytest.mark.slow)],
)
def test_jump_identity(make_evaluator, k, limit):
    evaluator = make_evaluator(k, limit, stride=limit // 1000, block_size=2**16)
    for n in np.random.default_rng(limit + k).integers(10, limit, 1000).tolist():
        jump = evaluator.value(n) - evaluator.value(n - 1e-7)
        assert jump == pytest.approx(_divisor_count(k, n), abs=1e-3)
        assert evaluator.value(n) - evaluator.value(n, "left") == pytest.approx(_divisor_count(k, n), abs=1e-9)


@pytest.mark.slow
def test_growth_stays_below_square_root_k3(make_evaluator):
    evaluator = make_evaluator(3, 10**7, stride=10**5, block_size=2**16)
    result = delta_extremes(3, 10**6, 9 * 10**6, evaluator)
    assert result.max_log_ratio <= 0.5
