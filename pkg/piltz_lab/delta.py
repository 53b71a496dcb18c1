"""
Evaluation of the error term Δ_k(x) = S_k(x) - x·P_k(log x).

Between consecutive integers Δ_k is a constant minus a smooth increasing
function, so one exact value per integer plus the cancellation-free main-term
increment gives Δ_k anywhere in the unit interval.
"""
import logging
import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel

from piltz_lab import config
from piltz_lab.analytic.main_term import main_term_coeffs, main_term_increment, main_term_value
from piltz_lab.divisor.checkpoints import SummatoryCheckpoint, ensure_checkpoints, summatory
from piltz_lab.divisor.sieve import check_order, divisor_block, range_values
from piltz_lab.errors import CoverageError, DomainError
from piltz_lab.numerics.extended import DoubleDouble
from piltz_lab.numerics.quadrature import window_max, window_min

logger = logging.getLogger(__name__)

Side = Literal["right", "left", "midpoint"]

# Below this Δ_k need not be monotone on unit intervals.
MONOTONE_FROM = 10


class DeltaSample(BaseModel):
    x: float
    value: float
    side: Side = "right"


class StreamSummary(BaseModel):
    """What delta_stream visited; d_total is Σ d_k(n) over X < n <= X + span."""

    k: int
    X: float
    span: float
    units: int
    first: Optional[int] = None
    last: Optional[int] = None
    d_total: int = 0


class DeltaExtremes(BaseModel):
    k: int
    X: float
    span: float
    exponent: float
    max_normalized: float
    argmax: float
    max_log_ratio: float
    reference_exponents: dict


class DeltaSegment:
    """
    Δ_k on [lo, hi] for integers lo <= hi.

    Arrays are indexed by n - lo for n = lo..hi: d (d_k(n)), S (S_k(n)) and
    base (Δ_k(n+)). Points below 1 evaluate to 0.
    """

    def __init__(self, k: int, lo: int, hi: int, d: np.ndarray, S: np.ndarray, poly):
        self.k = k
        self.lo = lo
        self.hi = hi
        self.d = d
        self.S = S
        self.poly = poly
        n = np.arange(lo, hi + 1, dtype=np.int64)
        exact = DoubleDouble.from_int(S) - main_term_value(k, n)
        self.base = np.asarray(exact.to_float(), dtype=np.float64)
        self.left = self.base - d

    @property
    def right(self):
        return self.base

    def index(self, n):
        idx = np.asarray(n, dtype=np.int64) - self.lo
        if np.any(idx < 0) or np.any(idx > self.hi - self.lo):
            raise DomainError(f"integer outside segment [{self.lo}, {self.hi}]")
        return idx

    def values_at(self, points):
        """Δ_k at arbitrary real points in [lo, hi] (right-continuous)."""
        points = np.asarray(points, dtype=np.float64)
        out = np.zeros(points.shape)
        live = points >= 1.0
        if not np.any(live):
            return out
        x = points[live]
        n = np.floor(x)
        idx = self.index(n)
        out[live] = self.base[idx] - main_term_increment(self.poly, n, x - n)
        return out

    def window_extrema(self, first, count):
        """
        For each i, the max of Δ(m+) and the min of Δ(m-) over
        m in [first[i], first[i] + count[i]); -inf / +inf when count is 0.
        """
        start = self.index(np.asarray(first, dtype=np.int64))
        return window_max(self.base, start, count), window_min(self.left, start, count)

    def __repr__(self):
        return f"DeltaSegment(k={self.k}, lo={self.lo}, hi={self.hi})"


class DeltaEvaluator:
    """Δ_k backed by one summatory checkpoint."""

    def __init__(self, k: int, checkpoints: SummatoryCheckpoint, block_size: int = None):
        check_order(k)
        if checkpoints.k != k:
            raise DomainError(f"checkpoint is for k={checkpoints.k}, not k={k}")
        self.k = k
        self.checkpoints = checkpoints
        self.block_size = config.BLOCK_SIZE if block_size is None else block_size
        self.poly = main_term_coeffs(k)

    @classmethod
    def covering(cls, k: int, need, stride: int = None, cache_dir: str = None, threads: int = 1,
                 backend: str = "local", block_size: int = None):
        """An evaluator whose checkpoint reaches at least `need`."""
        checkpoints = ensure_checkpoints(
            k, math.ceil(need) + 2, stride=stride, cache_dir=cache_dir,
            threads=threads, backend=backend, block_size=block_size,
        )
        return cls(k, checkpoints, block_size=block_size)

    @property
    def coverage(self) -> int:
        return self.checkpoints.coverage

    @property
    def stride(self) -> int:
        return self.checkpoints.stride

    def summatory(self, x) -> int:
        return summatory(self.k, x, self.checkpoints, self.block_size)

    def d(self, n: int) -> int:
        return divisor_block(self.k, n, n + 1)[n]

    def _check_point(self, x):
        if x < 1:
            raise DomainError(f"x must be >= 1, got {x}")
        if x > self.coverage:
            raise CoverageError(f"x = {x} is beyond checkpoint coverage {self.coverage}")

    def value(self, x, side: Side = "right") -> float:
        """Δ_k(x) with the one-sided convention `side` at integers."""
        self._check_point(x)
        n = math.floor(x)
        total = self.summatory(n)
        if x == n and side != "right":
            jump = self.d(n)
            total = DoubleDouble.from_int(total)
            total = total - (jump if side == "left" else jump / 2.0)
        else:
            total = DoubleDouble.from_int(total)
        return float(total - main_term_value(self.k, x))

    def segment(self, lo: int, hi: int) -> DeltaSegment:
        """Exact data for every integer in [lo, hi]."""
        lo, hi = int(lo), int(hi)
        if lo < 1 or hi < lo:
            raise DomainError(f"bad segment [{lo}, {hi}]")
        if hi > self.coverage:
            raise CoverageError(f"segment end {hi} is beyond checkpoint coverage {self.coverage}")
        start = self.summatory(lo - 1) if lo > 1 else 0
        d = range_values(self.k, lo, hi + 1, self.block_size)
        S = np.cumsum(d, dtype=np.int64) + np.int64(start)
        return DeltaSegment(self.k, lo, hi, d, S, self.poly)

    def segment_covering(self, y0: float, y1: float) -> Optional[DeltaSegment]:
        """A segment containing [y0, y1] and the left limit after y1; None below 1."""
        if y1 > self.coverage:
            raise CoverageError(f"{y1} is beyond checkpoint coverage {self.coverage}")
        if y1 < 1:
            return None
        lo = max(1, math.floor(y0))
        hi = min(math.floor(y1) + 1, self.coverage)
        return self.segment(lo, max(lo, hi))

    def values_at(self, points) -> np.ndarray:
        """Δ_k at scattered points, one segment per checkpoint cell touched."""
        points = np.asarray(points, dtype=np.float64)
        if points.size == 0:
            return np.zeros(0)
        if points.min() < 1 or points.max() > self.coverage:
            raise CoverageError(f"points span [{points.min()}, {points.max()}], coverage is [1, {self.coverage}]")
        out = np.empty(points.shape)
        cells = (np.floor(points).astype(np.int64) - 1) // self.stride
        for cell in np.unique(cells):
            mask = cells == cell
            lo = int(cell) * self.stride + 1
            hi = min(int(np.floor(points[mask].max())) + 1, self.coverage)
            out[mask] = self.segment(max(1, lo), max(lo, hi)).values_at(points[mask])
        return out

    def chunks(self, a: float, b: float):
        """Split [a, b] at the points c·stride + 1 so each piece starts on a checkpoint."""
        stride = self.stride
        cell = max(0, (math.floor(a) - 1) // stride)
        lo = a
        while lo < b:
            edge = (cell + 1) * stride + 1
            hi = min(b, edge)
            if hi > lo:
                yield lo, hi
            lo = max(lo, hi)
            cell += 1


# --- Module-level operations ---
def _evaluator(k, need, evaluator):
    if evaluator is not None:
        return evaluator
    return DeltaEvaluator.covering(k, need)


def delta_at(k: int, x, side: Side = "right", evaluator: DeltaEvaluator = None) -> float:
    return _evaluator(k, x, evaluator).value(x, side)


def delta_sample(k: int, x, side: Side = "right", evaluator: DeltaEvaluator = None) -> DeltaSample:
    if x != math.floor(x):
        side = "right"
    return DeltaSample(x=float(x), value=delta_at(k, x, side, evaluator), side=side)


def delta_star(k: int, n: int, evaluator: DeltaEvaluator = None) -> float:
    """(Δ_k(n+) + Δ_k(n-)) / 2."""
    if int(n) != n or n < 1:
        raise DomainError(f"delta_star needs a positive integer, got {n}")
    return _evaluator(k, n, evaluator).value(int(n), "midpoint")


def delta_stream(k: int, X, span, emit=None, evaluator: DeltaEvaluator = None) -> StreamSummary:
    """
    Visit every unit interval [n, n+1) meeting [X, X + span] in ascending
    order, calling emit(n, S_k(n), d_k(n)).
    """
    if span < 0 or X < 1:
        raise DomainError(f"bad stream range X={X}, span={span}")
    end = X + span
    evaluator = _evaluator(k, end, evaluator)
    first_n = math.floor(X)
    last_n = math.ceil(end) - 1 if end > first_n else first_n
    summary = StreamSummary(k=k, X=X, span=span, units=0)
    if last_n < first_n:
        return summary
    lo = first_n
    while lo <= last_n:
        hi = min(last_n, lo + evaluator.block_size - 1)
        seg = evaluator.segment(lo, hi)
        for i, n in enumerate(range(lo, hi + 1)):
            if emit is not None:
                emit(n, int(seg.S[i]), int(seg.d[i]))
            if X < n <= end:
                summary.d_total += int(seg.d[i])
        summary.units += hi - lo + 1
        lo = hi + 1
    summary.first, summary.last = first_n, last_n
    # the last integer n <= X + span may sit at the right end only
    tail = math.floor(end)
    if tail > last_n and tail > X:
        summary.d_total += evaluator.d(tail)
    return summary


def traversal(seg: DeltaSegment, a: float, b: float, closed: bool = True):
    """
    Δ_k in traversal order over [a, b]: Δ(a), Δ(m-), Δ(m+), ..., Δ(b).

    With closed=False the sequence stops at Δ(b-) for integer b, leaving the
    right limit at b to whoever continues from there.
    """
    integer_end = b == math.floor(b)
    last = math.floor(b) if closed or not integer_end else int(b) - 1
    m = np.arange(math.floor(a) + 1, last + 1, dtype=np.int64)
    idx = seg.index(m) if m.size else m
    inner = np.empty(2 * m.size)
    inner[0::2] = seg.left[idx]
    inner[1::2] = seg.base[idx]
    a_value = seg.values_at(np.array([a]))[0]
    if closed or not integer_end:
        b_value = seg.values_at(np.array([b]))[0]
    else:
        b_value = seg.left[seg.index(int(b))]
    xs = np.concatenate([[a], np.repeat(m.astype(np.float64), 2), [b]])
    return xs, np.concatenate([[a_value], inner, [b_value]])


def _sign_flips(values, carry: int):
    signs = np.sign(values)
    signs = signs[signs != 0]
    if carry:
        signs = np.concatenate([[carry], signs])
    if signs.size == 0:
        return 0, carry
    return int(np.count_nonzero(signs[1:] != signs[:-1])), int(signs[-1])


def count_sign_changes(k: int, lo, hi, evaluator: DeltaEvaluator = None) -> int:
    """
    Exact number of sign changes of Δ_k on [lo, hi].

    Δ_k decreases on each unit piece, so the ordered sequence of piece
    endpoint values carries every crossing. Zeros are dropped, so a touch
    is not a change.
    """
    if lo < MONOTONE_FROM:
        raise DomainError(f"sign counting needs lo >= {MONOTONE_FROM}, got {lo}")
    if hi <= lo:
        raise DomainError(f"empty range [{lo}, {hi}]")
    evaluator = _evaluator(k, hi, evaluator)
    total, carry = 0, 0
    for a, b in evaluator.chunks(lo, hi):
        seg = evaluator.segment_covering(a, b)
        _, values = traversal(seg, a, b, closed=b >= hi)
        flips, carry = _sign_flips(values, carry)
        total += flips
    return total


def delta_extremes(k: int, X, span, evaluator: DeltaEvaluator = None) -> DeltaExtremes:
    """Largest |Δ_k| / x^((k-1)/2k) and log|Δ_k| / log x over [X, X + span]."""
    if X < MONOTONE_FROM or span <= 0:
        raise DomainError(f"bad range X={X}, span={span}")
    evaluator = _evaluator(k, X + span, evaluator)
    exponent = (k - 1) / (2 * k)
    best = (-np.inf, X)
    best_log = -np.inf
    for a, b in evaluator.chunks(X, X + span):
        seg = evaluator.segment_covering(a, b)
        xs, values = traversal(seg, a, b, closed=True)
        magnitude = np.abs(values)
        normalized = magnitude / xs**exponent if exponent else magnitude
        i = int(np.argmax(normalized))
        if normalized[i] > best[0]:
            best = (float(normalized[i]), float(xs[i]))
        nonzero = magnitude > 0
        if np.any(nonzero):
            best_log = max(best_log, float(np.max(np.log(magnitude[nonzero]) / np.log(xs[nonzero]))))
    return DeltaExtremes(
        k=k, X=X, span=span, exponent=exponent,
        max_normalized=best[0], argmax=best[1], max_log_ratio=best_log,
        reference_exponents={"conjectured": exponent, "k3_pointwise_bound": 43 / 96},
    )
