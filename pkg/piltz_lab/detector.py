"""
Intervals of [X, 2X] on which Δ_k keeps one sign.

With c = C_k/2 - η and a = (k-1)/2k,

    G_k(x) = |Δ_k(x)| - c·x^a
    W_k(x) = G_k(x)² - sup_{0<=h<=H} (G_k(x+h) - G_k(x))² - (C_k x^a / 2)²,

and W_k(x) > 0 forces G_k > 0 on [x, x+H], so |Δ_k| stays above c·y^a there.
Δ_k can still change sign by an upward jump d_k(n) at an integer n, so a
candidate is admissible only when W_k(x) > 0 and no jump in (x, x+H] crosses
zero.
"""
import logging
import math
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel

from piltz_lab.analytic.constants import ck_value
from piltz_lab.analytic.main_term import main_term_derivative, main_term_increment
from piltz_lab.delta import MONOTONE_FROM, DeltaEvaluator, DeltaSegment, count_sign_changes, traversal
from piltz_lab.errors import DomainError, VerificationError
from piltz_lab.numerics.quadrature import window_max, window_min
from piltz_lab.parallel import map_ordered

logger = logging.getLogger(__name__)

NEWTON_STEPS = 6
CENSUS_REFERENCE_EXPONENT = 37 / 96
_CANDIDATES_PER_CHUNK = 4096


class IntervalRecord(BaseModel):
    k: int
    start: float
    H: float
    threshold_at_start: float
    min_abs_delta: float
    sign: Literal["+", "-"]
    sign_changes: int
    witness_x: float
    w_value: float


class CensusSummary(BaseModel):
    k: int
    X: float
    H: float
    eta: float
    scan_stride: float
    count: int
    measure_estimate: float
    # candidates with W_k > 0 whose window holds a zero-crossing jump
    jump_excluded: int
    union_measure: float
    exponent: Optional[float]
    reference_exponent: float = CENSUS_REFERENCE_EXPONENT
    cauchy_schwarz_bound: Optional[float]
    admissibility_lhs: float
    admissibility_rhs: float
    admissible: bool
    intervals: List[IntervalRecord]


def _exponent(k: int) -> float:
    return (k - 1) / (2 * k)


def _check_eta(k: int, eta: float) -> float:
    half = ck_value(k) / 2
    if not 0 < eta < half:
        raise DomainError(f"eta must lie in (0, C_{k}/2) = (0, {half:.6g}), got {eta}")
    return half - eta


def interval_length(k: int, X, xi: float, regime: Literal["unconditional", "lindelof"] = "unconditional") -> float:
    """H = X^(1/2-ξ) unconditionally for k = 3, X^(1-1/k-ξ) under Lindelöf."""
    if xi <= 0:
        raise DomainError(f"xi must be > 0, got {xi}")
    if regime == "unconditional":
        if k != 3:
            raise DomainError("the unconditional interval length is stated for k = 3 only")
        return X ** (0.5 - xi)
    if regime == "lindelof":
        return X ** (1 - 1 / k - xi)
    raise DomainError(f"unknown regime {regime!r}")


# --- Piecewise profile of G_k ---
def crossing_points(seg: DeltaSegment, n):
    """The zero of Δ_k inside [n, n+1) for pieces with Δ(n+) > 0 > Δ((n+1)-), by Newton."""
    n = np.asarray(n, dtype=np.int64)
    idx = seg.index(n)
    target = seg.base[idx]
    nf = n.astype(np.float64)
    t = np.clip(target / main_term_derivative(seg.poly, nf), 0.0, 1.0)
    for _ in range(NEWTON_STEPS):
        step = (main_term_increment(seg.poly, nf, t) - target) / main_term_derivative(seg.poly, nf + t)
        t = np.clip(t - step, 0.0, 1.0)
    return nf + t


class GProfile:
    """G_k at every one-sided integer limit of a segment, plus its crossing minima."""

    def __init__(self, seg: DeltaSegment, c: float):
        self.seg = seg
        self.c = c
        self.a = _exponent(seg.k)
        m = np.arange(seg.lo, seg.hi + 1, dtype=np.float64)
        scale = c * m**self.a
        g_plus = np.abs(seg.base) - scale
        g_minus = np.abs(seg.left) - scale
        self.upper = np.maximum(g_plus, g_minus)
        self.lower = np.minimum(g_plus, g_minus)
        # piece [m, m+1) crosses zero when Δ(m+) > 0 > Δ((m+1)-)
        self.cross_z = np.full(m.shape, np.nan)
        live = np.zeros(m.shape, dtype=bool)
        live[:-1] = (seg.base[:-1] > 0) & (seg.left[1:] < 0)
        if np.any(live):
            self.cross_z[live] = crossing_points(seg, m[live].astype(np.int64))
        self.cross_g = np.where(live, -c * np.nan_to_num(self.cross_z, nan=1.0) ** self.a, np.inf)
        flips = ((seg.base > 0) & (seg.left < 0)) | ((seg.base < 0) & (seg.left > 0))
        self.flip_prefix = np.concatenate([[0], np.cumsum(flips, dtype=np.int64)])

    def g(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.abs(self.seg.values_at(x)) - self.c * x**self.a

    def extremes(self, x, H: float):
        """(G(x), max G, min G) over [x, x+H] for each x."""
        x = np.asarray(x, dtype=np.float64)
        lo = self.seg.lo
        n0 = np.floor(x).astype(np.int64)
        n1 = np.floor(x + H).astype(np.int64)
        gx = self.g(x)
        gxh = self.g(x + H)
        start = n0 + 1 - lo
        count = n1 - n0
        top = np.maximum(np.maximum(gx, gxh), window_max(self.upper, start, count))
        bottom = np.minimum(np.minimum(gx, gxh), window_min(self.lower, start, count))
        bottom = np.minimum(bottom, window_min(self.cross_g, start, np.maximum(count - 1, 0)))
        # partial pieces at both ends
        z0 = self.cross_z[n0 - lo]
        first = (z0 >= x) & (z0 <= x + H)
        bottom = np.where(first, np.minimum(bottom, -self.c * np.where(first, z0, 1.0) ** self.a), bottom)
        z1 = self.cross_z[n1 - lo]
        last = (n1 > n0) & (z1 <= x + H)
        bottom = np.where(last, np.minimum(bottom, -self.c * np.where(last, z1, 1.0) ** self.a), bottom)
        return gx, top, bottom

    def jump_flips(self, x, H: float):
        """Number of integers n in (x, x+H] where Δ_k(n-) and Δ_k(n+) have opposite signs."""
        x = np.asarray(x, dtype=np.float64)
        start = np.floor(x).astype(np.int64) + 1 - self.seg.lo
        stop = np.floor(x + H).astype(np.int64) + 1 - self.seg.lo
        return self.flip_prefix[stop] - self.flip_prefix[start]


def _w_from(profile: GProfile, x, H: float, half_c: float):
    gx, top, bottom = profile.extremes(x, H)
    sup = np.maximum((top - gx) ** 2, (bottom - gx) ** 2)
    reference = (half_c * np.asarray(x, dtype=np.float64) ** profile.a) ** 2
    return gx**2 - sup - reference, gx, sup


def _profile_for(evaluator: DeltaEvaluator, x0: float, x1: float, H: float, c: float) -> GProfile:
    if x0 < MONOTONE_FROM:
        raise DomainError(f"G_k profiles need x >= {MONOTONE_FROM}, got {x0}")
    return GProfile(evaluator.segment_covering(x0, x1 + H), c)


def _evaluator(k, need, evaluator):
    return evaluator if evaluator is not None else DeltaEvaluator.covering(k, need)


# --- Pointwise operations ---
def gk(k: int, x, eta: float, evaluator: DeltaEvaluator = None) -> float:
    c = _check_eta(k, eta)
    evaluator = _evaluator(k, x, evaluator)
    return abs(evaluator.value(x)) - c * x ** _exponent(k)


def wk(k: int, x, H: float, eta: float, evaluator: DeltaEvaluator = None) -> float:
    c = _check_eta(k, eta)
    if H < 0:
        raise DomainError(f"H must be >= 0, got {H}")
    evaluator = _evaluator(k, x + H, evaluator)
    profile = _profile_for(evaluator, x, x, H, c)
    w, _, _ = _w_from(profile, np.array([float(x)]), H, ck_value(k) / 2)
    return float(w[0])


# --- Scan ---
def _scan_chunk(k, evaluator, xs, H, c, half_c):
    """W_k, G_k, the sup term and sign-flipping jump counts at sorted candidates xs."""
    profile = _profile_for(evaluator, float(xs[0]), float(xs[-1]), H, c)
    w, g, sup = _w_from(profile, xs, H, half_c)
    return w, g, sup, profile.jump_flips(xs, H)


def scan(k: int, X, H: float, eta: float, scan_stride: float = None, evaluator: DeltaEvaluator = None,
         threads: int = 1):
    """
    Candidates x = X + j·stride with x + H <= 2X.

    Returns:
        (xs, W_k, G_k, sup term, stride, jumps), where jumps counts the
        zero-crossing jumps inside each window.
    """
    if X < MONOTONE_FROM:
        raise DomainError(f"X must be >= {MONOTONE_FROM}, got {X}")
    if H < 1 or H > X / 8:
        raise DomainError(f"H must lie in [1, X/8], got H={H} for X={X}")
    stride = H / 4 if scan_stride is None else scan_stride
    if not 0 < stride <= H:
        raise DomainError(f"scan stride must lie in (0, H], got {stride}")
    c = _check_eta(k, eta)
    evaluator = _evaluator(k, 2 * X, evaluator)
    count = int(math.floor((X - H) / stride)) + 1
    xs = X + stride * np.arange(count, dtype=np.float64)
    xs = xs[xs + H <= 2 * X]
    per_chunk = max(1, min(_CANDIDATES_PER_CHUNK, int(evaluator.block_size // max(stride, 1.0))))
    chunks = [xs[i : i + per_chunk] for i in range(0, xs.size, per_chunk)]
    parts = map_ordered(_scan_chunk, [(k, evaluator, chunk, H, c, ck_value(k) / 2) for chunk in chunks], threads)
    w = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0)
    g = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0)
    sup = np.concatenate([p[2] for p in parts]) if parts else np.zeros(0)
    jumps = np.concatenate([p[3] for p in parts]) if parts else np.zeros(0, dtype=np.int64)
    return xs, w, g, sup, stride, jumps


def verify_interval(k: int, start: float, H: float, c: float, evaluator: DeltaEvaluator, w_value: float):
    """Independent check: no sign change and |Δ_k(y)| > c·y^a at every piece endpoint."""
    changes = count_sign_changes(k, start, start + H, evaluator)
    seg = evaluator.segment_covering(start, start + H)
    ys, values = traversal(seg, start, start + H, closed=True)
    a = _exponent(k)
    magnitude = np.abs(values)
    below = magnitude <= c * ys**a
    if changes or np.any(below):
        raise VerificationError(
            f"interval [{start}, {start + H}] with W_k = {w_value:.6g} failed re-verification: "
            f"{changes} sign changes, {int(np.count_nonzero(below))} points under threshold"
        )
    return IntervalRecord(
        k=k, start=start, H=H, threshold_at_start=c * start**a,
        min_abs_delta=float(magnitude.min()), sign="+" if values[0] > 0 else "-",
        sign_changes=changes, witness_x=start, w_value=w_value,
    )


def _admissible(w, jumps):
    return (w > 0) & (jumps == 0)


def _greedy(xs, w, jumps, H):
    chosen = []
    end = -math.inf
    for x, value, ok in zip(xs, w, _admissible(w, jumps)):
        if ok and x > end:
            chosen.append((float(x), float(value)))
            end = x + H
    return chosen


def detect_intervals(k: int, X, H: float, eta: float, scan_stride: float = None,
                     evaluator: DeltaEvaluator = None, threads: int = 1) -> List[IntervalRecord]:
    """Disjoint admissible [x, x+H] ⊂ [X, 2X], first-fit by ascending x, each re-verified."""
    evaluator = _evaluator(k, 2 * X, evaluator)
    xs, w, _, _, _, jumps = scan(k, X, H, eta, scan_stride, evaluator, threads)
    c = _check_eta(k, eta)
    records = [verify_interval(k, x, H, c, evaluator, value) for x, value in _greedy(xs, w, jumps, H)]
    logger.info("k=%d X=%g H=%g eta=%g: %d intervals from %d candidates, %d excluded by jumps", k, X, H, eta,
                len(records), xs.size, int(np.count_nonzero((w > 0) & (jumps > 0))))
    return records


def interval_census(k: int, X, H: float, eta: float, scan_stride: float = None,
                    evaluator: DeltaEvaluator = None, threads: int = 1) -> CensusSummary:
    """Detected count, scan measure of the admissible set and the quantities bounding it."""
    evaluator = _evaluator(k, 2 * X, evaluator)
    xs, w, g, sup, stride, jumps = scan(k, X, H, eta, scan_stride, evaluator, threads)
    c = _check_eta(k, eta)
    records = [verify_interval(k, x, H, c, evaluator, value) for x, value in _greedy(xs, w, jumps, H)]
    positive = np.clip(w, 0.0, None)
    g4 = math.fsum((g**4).tolist()) * stride
    cauchy_schwarz = (math.fsum(positive.tolist()) * stride) ** 2 / g4 if g4 > 0 else None
    C = ck_value(k)
    power = 2 - 1 / k
    admissibility_rhs = 0.5 * C * eta * ((2 * X) ** power - X**power) / (power * X)
    admissibility_lhs = math.fsum(sup.tolist()) * stride / X
    count = len(records)
    summary = CensusSummary(
        k=k, X=X, H=H, eta=eta, scan_stride=stride, count=count,
        measure_estimate=float(np.count_nonzero(_admissible(w, jumps))) * stride,
        jump_excluded=int(np.count_nonzero((w > 0) & (jumps > 0))),
        union_measure=count * H,
        exponent=math.log(count) / math.log(X) if count else None,
        cauchy_schwarz_bound=cauchy_schwarz,
        admissibility_lhs=admissibility_lhs,
        admissibility_rhs=admissibility_rhs,
        admissible=admissibility_lhs <= admissibility_rhs,
        intervals=records,
    )
    logger.info("census k=%d X=%g: %d intervals, measure ~ %.4g, exponent %s", k, X, count,
                summary.measure_estimate, summary.exponent)
    return summary
