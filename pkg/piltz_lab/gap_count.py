"""
Brute-force counts of μ in (W, 2W] with (μ^(1/k) + α)^k within ρ of an
integer, against the bound W·ρ + W^(2/3-1/(3k))·α^(1/3) + W^(1/2+1/(2k))·α^(-1/2).
"""
import logging
import math
from typing import Callable, Iterable, List, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from piltz_lab import config
from piltz_lab.divisor.sieve import check_order
from piltz_lab.errors import DomainError, PrecisionError
from piltz_lab.numerics import extended
from piltz_lab.numerics.extended import DoubleDouble
from piltz_lab.parallel import map_ordered

logger = logging.getLogger(__name__)

MAX_W = 10**9
CERTIFIED_DISTANCE = 1e-10
_UNIT_ROUNDOFF = 2.0**-104
_BLOCK = 1 << 20


class GapCountResult(BaseModel):
    k: int
    W: int
    alpha: float
    rho: float
    count: int
    uncertain: int
    bound_value: float
    ratio: float
    error_bound: float


def bound_value(k: int, W: int, alpha: float, rho: float) -> float:
    return (
        W * rho
        + W ** (2 / 3 - 1 / (3 * k)) * alpha ** (1 / 3)
        + W ** (1 / 2 + 1 / (2 * k)) * alpha ** (-1 / 2)
    )


def _check(k: int, W: int, alpha: float, rho: float):
    check_order(k)
    if W < 1 or W > MAX_W:
        raise DomainError(f"W must lie in [1, {MAX_W}], got {W}")
    if not 0 < alpha <= config.GAP_ALPHA_CONSTANT * W ** (1 / k):
        raise DomainError(f"alpha must lie in (0, {config.GAP_ALPHA_CONSTANT}·W^(1/k)], got {alpha}")
    if not 0 < rho <= 0.5:
        raise DomainError(f"rho must lie in (0, 1/2], got {rho}")


def shifted_power(k: int, mu, alpha: float) -> DoubleDouble:
    """(μ^(1/k) + α)^k in double-double for an int64 array μ."""
    root = extended.kth_root(DoubleDouble.from_int(np.asarray(mu, dtype=np.int64)), k)
    return extended.power(root + float(alpha), k)


def _count_block(k: int, lo: int, hi: int, alpha: float, rho: float):
    """(count, uncertain, largest error bound) for lo <= μ < hi."""
    mu = np.arange(lo, hi, dtype=np.int64)
    y = shifted_power(k, mu, alpha)
    err = 64 * k * _UNIT_ROUNDOFF * np.abs(y.hi)
    distance = extended.nearest_integer_distance(y)
    inside = distance <= rho
    if rho >= 0.5:
        uncertain = 0
    else:
        uncertain = int(np.count_nonzero(np.abs(distance - rho) <= err))
    return int(np.count_nonzero(inside)), uncertain, float(err.max())


def count_near_integers(k: int, W: int, alpha: float, rho: float, threads: int = 1) -> GapCountResult:
    """#{W < μ <= 2W : ||(μ^(1/k) + α)^k|| <= ρ}, with a certified distance."""
    W = int(W)
    _check(k, W, alpha, rho)
    units = [(k, lo, min(lo + _BLOCK, 2 * W + 1), float(alpha), float(rho))
             for lo in range(W + 1, 2 * W + 1, _BLOCK)]
    parts = map_ordered(_count_block, units, threads)
    count = sum(p[0] for p in parts)
    uncertain = sum(p[1] for p in parts)
    error_bound = max(p[2] for p in parts)
    if error_bound > CERTIFIED_DISTANCE:
        raise PrecisionError(
            f"distance error bound {error_bound:.3g} exceeds {CERTIFIED_DISTANCE} at k={k}, W={W}, alpha={alpha}"
        )
    bound = bound_value(k, W, alpha, rho)
    if uncertain:
        logger.warning("%d of %d values sit within the error bound of rho=%g", uncertain, W, rho)
    return GapCountResult(
        k=k, W=W, alpha=float(alpha), rho=float(rho), count=count, uncertain=uncertain,
        bound_value=bound, ratio=count / bound, error_bound=error_bound,
    )


# --- α samplers ---
def log_uniform_alphas(k: int, W: int, draws: int = 16, seed: int = 0) -> List[float]:
    """`draws` log-uniform values in (W^(-1/2), W^(1/k))."""
    rng = np.random.default_rng(seed)
    low, high = -0.5 * math.log(W), math.log(W) / k
    return sorted(float(a) for a in np.exp(rng.uniform(low, high, size=draws)))


def difference_alphas(k: int, pairs: Iterable[Sequence[int]]) -> List[float]:
    """α = ν^(1/k) - n^(1/k) for each pair n < ν, taken in double-double."""
    out = []
    for n, nu in pairs:
        if not 1 <= n < nu:
            raise DomainError(f"need 1 <= n < nu, got ({n}, {nu})")
        upper = extended.kth_root(DoubleDouble.from_int(int(nu)), k)
        lower = extended.kth_root(DoubleDouble.from_int(int(n)), k)
        out.append(float(upper - lower))
    return out


# --- Sweeps ---
class SweepResult(BaseModel):
    rows: List[GapCountResult]
    max_ratio: float
    uncertain: int

    def frame(self) -> pd.DataFrame:
        columns = ["k", "W", "alpha", "rho", "count", "bound_value", "ratio", "uncertain"]
        frame = pd.DataFrame([r.model_dump() for r in self.rows], columns=columns + ["error_bound"])
        frame = frame[columns].rename(columns={"bound_value": "bound"})
        frame["uncertain"] = frame["uncertain"] > 0
        return frame


AlphaSource = Union[Sequence[float], Callable[[int], Sequence[float]]]


def lemma_ratio_sweep(k: int, Ws: Iterable[int], alphas: AlphaSource, rhos: Iterable[float],
                      threads: int = 1) -> SweepResult:
    """count/bound over the grid Ws × alphas(W) × rhos; max_ratio is the empirical constant."""
    rhos = list(rhos)
    rows = []
    for W in Ws:
        draws = alphas(W) if callable(alphas) else alphas
        for alpha in draws:
            for rho in rhos:
                rows.append(count_near_integers(k, W, alpha, rho, threads=threads))
    if not rows:
        raise DomainError("empty sweep")
    result = SweepResult(
        rows=rows,
        max_ratio=max(r.ratio for r in rows),
        uncertain=sum(r.uncertain for r in rows),
    )
    logger.info("Gap-count sweep k=%d: %d configurations, max ratio %.4g, %d uncertain",
                k, len(rows), result.max_ratio, result.uncertain)
    return result
