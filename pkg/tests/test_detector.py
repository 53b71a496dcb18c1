"""
Tests for the sign-constancy detector.
"""
import math
import unittest

import numpy as np
import pytest

from conftest import SMALL_BLOCK, SMALL_STRIDE
from piltz_lab.analytic.constants import ck_value
from piltz_lab.delta import DeltaEvaluator, count_sign_changes
from piltz_lab.detector import (
    GProfile,
    detect_intervals,
    gk,
    interval_census,
    interval_length,
    scan,
    verify_interval,
    wk,
)
from piltz_lab.errors import DomainError, VerificationError

X = 10**4


@pytest.fixture(scope="module")
def evaluator(tmp_path_factory):
    cache = tmp_path_factory.mktemp("detector-cache")
    return DeltaEvaluator.covering(2, 2 * X, stride=SMALL_STRIDE, cache_dir=str(cache), block_size=SMALL_BLOCK)


@pytest.fixture(scope="module")
def eta():
    return 0.45 * ck_value(2)


class TestIntervalLength(unittest.TestCase):
    def test_unconditional_k3(self):
        self.assertAlmostEqual(interval_length(3, 10**6, 0.1), (10**6) ** 0.4)

    def test_lindelof(self):
        self.assertAlmostEqual(interval_length(4, 10**6, 0.05, regime="lindelof"), (10**6) ** 0.7)

    def test_rejections(self):
        with self.assertRaises(DomainError):
            interval_length(2, 10**6, 0.1)
        with self.assertRaises(DomainError):
            interval_length(3, 10**6, 0.0)
        with self.assertRaises(DomainError):
            interval_length(3, 10**6, 0.1, regime="riemann")


def test_g_increases_with_eta(evaluator):
    C = ck_value(2)
    values = [gk(2, 5000.5, e * C, evaluator) for e in (0.1, 0.2, 0.3, 0.45)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_w_without_shift(evaluator, eta):
    x = 7777.7
    g = gk(2, x, eta, evaluator)
    reference = (ck_value(2) / 2 * x**0.25) ** 2
    assert wk(2, x, 0, eta, evaluator) == pytest.approx(g**2 - reference, rel=1e-12, abs=1e-9)


def test_eta_range(evaluator):
    with pytest.raises(DomainError):
        gk(2, 1000, 0, evaluator)
    with pytest.raises(DomainError):
        gk(2, 1000, ck_value(2) / 2, evaluator)
    with pytest.raises(DomainError):
        wk(2, 1000, -1, 0.1, evaluator)


def test_scan_domain(evaluator, eta):
    with pytest.raises(DomainError):
        scan(2, 5, 1, eta, evaluator=evaluator)
    with pytest.raises(DomainError):
        scan(2, X, 0.5, eta, evaluator=evaluator)
    with pytest.raises(DomainError):
        scan(2, X, X / 4, eta, evaluator=evaluator)
    with pytest.raises(DomainError):
        scan(2, X, 2, eta, scan_stride=3, evaluator=evaluator)


def test_scan_grid(evaluator, eta):
    xs, w, g, sup, stride, jumps = scan(2, X, 4, eta, evaluator=evaluator)
    assert stride == 1.0
    assert xs[0] == X and xs[-1] + 4 <= 2 * X
    assert w.shape == g.shape == sup.shape == jumps.shape == xs.shape
    assert np.all(sup >= 0)
    assert np.all(jumps >= 0)


def test_sup_term_against_grid(evaluator, eta):
    H = 6.0
    xs, _, g, sup, _, _ = scan(2, X, H, eta, scan_stride=5.3, evaluator=evaluator)
    c = ck_value(2) / 2 - eta
    profile = GProfile(evaluator.segment_covering(X, 2 * X), c)
    for x, gx, s in zip(xs[::40], g[::40], sup[::40]):
        integers = np.arange(np.floor(x) + 1, np.floor(x + H) + 1)
        ys = np.concatenate([np.linspace(x, x + H, 4001), integers, integers - 1e-9])
        grid = np.max((profile.g(ys) - gx) ** 2)
        assert grid <= s + 1e-6


def test_detects_short_intervals(evaluator, eta):
    records = detect_intervals(2, X, 1, eta, evaluator=evaluator)
    assert len(records) >= 1
    starts = [r.start for r in records]
    assert starts == sorted(starts)
    assert all(b > a + 1 for a, b in zip(starts, starts[1:]))
    for record in records:
        assert record.sign_changes == 0
        assert record.w_value > 0
        assert record.min_abs_delta > record.threshold_at_start
        assert record.sign in "+-"
        assert count_sign_changes(2, record.start, record.start + 1, evaluator) == 0


def test_long_windows_find_nothing(evaluator, eta):
    summary = interval_census(2, X, X / 8, eta, scan_stride=50, evaluator=evaluator)
    assert summary.count == 0
    assert summary.exponent is None
    assert summary.union_measure == 0
    assert summary.intervals == []


def test_census_fields(evaluator, eta):
    summary = interval_census(2, X, 1, eta, evaluator=evaluator)
    assert summary.count == len(summary.intervals) >= 1
    assert summary.union_measure == summary.count * 1
    assert summary.measure_estimate >= summary.count * summary.scan_stride
    assert summary.exponent == pytest.approx(np.log(summary.count) / np.log(X))
    assert summary.reference_exponent == 37 / 96
    assert summary.cauchy_schwarz_bound is not None and summary.cauchy_schwarz_bound >= 0
    assert summary.admissible == (summary.admissibility_lhs <= summary.admissibility_rhs)


def test_thread_count_does_not_change_scan(evaluator, eta):
    serial = scan(2, X, 8, eta, evaluator=evaluator, threads=1)
    pooled = scan(2, X, 8, eta, evaluator=evaluator, threads=2)
    np.testing.assert_array_equal(serial[1], pooled[1])


def test_verification_rejects_sign_change(evaluator, eta):
    start = next(s for s in range(X, 2 * X, 50) if count_sign_changes(2, s, s + 50, evaluator))
    with pytest.raises(VerificationError):
        verify_interval(2, float(start), 50.0, ck_value(2) / 2 - eta, evaluator, 1.0)


def test_jump_flips_against_one_sided_limits(evaluator, eta):
    xs, _, _, _, _, jumps = scan(2, X, 4, eta, evaluator=evaluator)
    for x, found in zip(xs[::37], jumps[::37]):
        integers = range(int(np.floor(x)) + 1, int(np.floor(x + 4)) + 1)
        expected = sum(1 for n in integers if evaluator.value(n, "left") * evaluator.value(n) < 0)
        assert found == expected


def test_zero_crossing_jump_is_excluded(evaluator, eta):
    # Δ_2 jumps from below -threshold to above +threshold at 10008
    xs, w, _, _, _, jumps = scan(2, X, 1, eta, evaluator=evaluator)
    i = int(np.searchsorted(xs, 10007.75))
    assert xs[i] == 10007.75
    assert w[i] > 0 and jumps[i] == 1
    records = detect_intervals(2, X, 1, eta, evaluator=evaluator)
    assert all(not (r.start < 10008 <= r.start + 1) for r in records)
    assert interval_census(2, X, 1, eta, evaluator=evaluator).jump_excluded >= 1


def test_large_jumps_do_not_abort_detection(make_evaluator):
    X_big = 10**5
    evaluator = make_evaluator(2, 2 * X_big)
    eta = 0.3 * ck_value(2)
    xs, w, _, _, _, jumps = scan(2, X_big, 1, eta, evaluator=evaluator)
    i = int(np.searchsorted(xs, 100049.75))
    assert w[i] > 0 and jumps[i] >= 1
    summary = interval_census(2, X_big, 1, eta, evaluator=evaluator)
    assert summary.count >= 1
    assert summary.jump_excluded >= 1
    for record in summary.intervals:
        assert record.sign_changes == 0
        assert count_sign_changes(2, record.start, record.start + 1, evaluator) == 0


def test_detects_the_largest_excursion(evaluator, eta):
    seg = evaluator.segment(X, 2 * X - 2)
    peak = X + int(np.argmax(seg.base))
    # the main term rises by under 11.1 per unit below 2·10^4, so the unit window at the peak is admissible
    assert seg.base.max() > 14
    records = detect_intervals(2, X, 1, eta, evaluator=evaluator)
    assert any(abs(r.start - peak) <= 1 for r in records)


@pytest.mark.slow
def test_detector_soundness_k3(tmp_path):
    X_big = 10**7
    H = math.ceil(X_big**0.4)
    evaluator = DeltaEvaluator.covering(3, 2 * X_big, cache_dir=str(tmp_path))
    summary = interval_census(3, X_big, H, 0.1 * ck_value(3), evaluator=evaluator, threads=2)
    for record in summary.intervals:
        assert record.sign_changes == 0
        assert record.min_abs_delta > record.threshold_at_start
    if summary.count:
        assert summary.exponent == pytest.approx(math.log(summary.count) / math.log(X_big))
