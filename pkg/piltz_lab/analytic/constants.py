"""
The constant C_k = (1/π)·sqrt(D_k(1 + 1/k) / (2k)), D_k(s) = Σ d_k(n)² n^(-s),
by an Euler product and, independently, by a direct partial sum with a
certified tail.
"""
import logging
import math
from functools import lru_cache
from math import comb
from typing import Literal, Optional, Tuple

import mpmath
import numpy as np
from pydantic import BaseModel

from piltz_lab.divisor.sieve import check_order, iter_blocks, primes_up_to
from piltz_lab.errors import ConvergenceError, DomainError
from piltz_lab.numerics.zeta import zeta_em

logger = logging.getLogger(__name__)

_DPS = 40
# Local factors at primes up to here are summed exactly in mpmath.
_EXACT_PRIME_LIMIT = 1000
_LOG_SERIES_TERMS = 14
_TAIL_SAFETY = 2.0

PROVENANCE_NOTE = "no published numeric value of C_k exists to compare with; targets are derived"


class CkValue(BaseModel):
    k: int
    value: float
    value_decimal: str
    method: Literal["euler-product", "direct-sum"]
    error_bracket: Tuple[float, float]
    parameters: dict
    provenance: str = PROVENANCE_NOTE

    @property
    def width(self) -> float:
        return self.error_bracket[1] - self.error_bracket[0]


def _check_range(k: int):
    check_order(k)
    if k < 2:
        raise DomainError(f"C_k is defined here for 2 <= k <= 6, got k={k}")


def c_from_series(k: int, d):
    """C_k from D_k(1 + 1/k)."""
    with mpmath.workdps(_DPS):
        return mpmath.sqrt(mpmath.mpf(d) / (2 * k)) / mpmath.pi


def c2_closed_form():
    """(1/π)·sqrt(ζ(3/2)^4 / (4 ζ(3))) from Σ d(n)² n^(-s) = ζ(s)^4 / ζ(2s)."""
    with mpmath.workdps(_DPS):
        s = mpmath.mpf(3) / 2
        return c_from_series(2, zeta_em(s) ** 4 / zeta_em(2 * s))


@lru_cache(maxsize=None)
def _log_factor_series(k: int):
    """e_j with log[(1-z)^(k²) Σ_a C(a+k-1,k-1)² z^a] = Σ_{j>=2} e_j z^j (e_0 = e_1 = 0)."""
    with mpmath.workdps(_DPS):
        b = [mpmath.mpf(comb(a + k - 1, k - 1) ** 2) for a in range(_LOG_SERIES_TERMS + 1)]
        logs = [mpmath.mpf(0)] * (_LOG_SERIES_TERMS + 1)
        for j in range(1, _LOG_SERIES_TERMS + 1):
            acc = j * b[j] - mpmath.fsum(i * logs[i] * b[j - i] for i in range(1, j))
            logs[j] = acc / j
        return [float(logs[j] - mpmath.mpf(k * k) / j) if j else 0.0 for j in range(_LOG_SERIES_TERMS + 1)]


def _exact_local_factor(k: int, p: int, s):
    z = mpmath.power(p, -s)
    total, a, term = mpmath.mpf(0), 0, mpmath.mpf(1)
    threshold = mpmath.mpf(10) ** -(_DPS + 2)
    while True:
        term = comb(a + k - 1, k - 1) ** 2 * z**a
        total += term
        if a > 2 * k and term < threshold * total:
            break
        a += 1
    return (1 - z) ** (k * k) * total


def ck_euler(k: int, prime_limit: int = 10**5, tol: Optional[float] = None) -> CkValue:
    """
    C_k through D_k(s) = ζ(s)^(k²) Π_p F_p at s = 1 + 1/k.

    F_p is summed exactly for small p and through its log-series for larger p;
    the primes beyond prime_limit contribute exp(e_2 E_1((2s-1) log P)), and
    the bracket bounds that tail by A·P^(1-2s)/(2s-1) with |log F_p| <= A p^(-2s).
    """
    _check_range(k)
    if prime_limit < 1000:
        raise DomainError(f"prime_limit must be >= 1000, got {prime_limit}")
    with mpmath.workdps(_DPS):
        s = 1 + mpmath.mpf(1) / k
        primes = primes_up_to(int(prime_limit))
        small = primes[primes <= _EXACT_PRIME_LIMIT]
        large = primes[primes > _EXACT_PRIME_LIMIT].astype(np.float64)

        log_product = mpmath.fsum(mpmath.log(_exact_local_factor(k, int(p), s)) for p in small)
        series = np.array(_log_factor_series(k))
        z = large ** (-float(s))
        log_large = np.polynomial.polynomial.polyval(z, series)
        log_product += math.fsum(log_large.tolist())

        P = mpmath.mpf(int(prime_limit))
        e2 = series[2]
        tail_estimate = e2 * mpmath.e1((2 * s - 1) * mpmath.log(P))
        z_edge = float(P ** (-s))
        A = float(np.sum(np.abs(series[2:]) * z_edge ** np.arange(_LOG_SERIES_TERMS - 1)))
        tail_bound = A * P ** (1 - 2 * s) / (2 * s - 1)
        slack = tail_bound + abs(tail_estimate)

        log_d = k * k * mpmath.log(zeta_em(s)) + log_product + tail_estimate
        value = c_from_series(k, mpmath.exp(log_d))
        lower = c_from_series(k, mpmath.exp(log_d - slack))
        upper = c_from_series(k, mpmath.exp(log_d + slack))

    result = CkValue(
        k=k,
        value=float(value),
        value_decimal=mpmath.nstr(value, 30),
        method="euler-product",
        error_bracket=(float(lower), float(upper)),
        parameters={"prime_limit": int(prime_limit), "s": float(s), "tail_log_estimate": float(tail_estimate)},
    )
    logger.info("C_%d (euler, P=%d) = %s +/- %.3g", k, prime_limit, result.value_decimal, result.width / 2)
    if tol is not None and result.width > tol:
        raise ConvergenceError(f"C_{k} euler bracket width {result.width:.3g} exceeds tol {tol}")
    return result


def ck_direct(k: int, N: int, tol: Optional[float] = None, block_size: int = None) -> CkValue:
    """
    Σ_{n<=N} d_k(n)²/n^(1+1/k) plus a tail in [0, T_max].

    With Σ_{n<=x} d_k(n)² <= A x (log x)^m, m = k² - 1, partial summation gives
    T_max = s·A·k^(m+1)·Γ(m+1, log N / k); A is the largest ratio seen on
    [N/2, N], doubled.
    """
    _check_range(k)
    N = int(N)
    if N < 10**4:
        raise DomainError(f"N must be >= 10^4, got {N}")
    s = 1.0 + 1.0 / k
    m = k * k - 1
    partials = []
    running = 0
    ratio = 0.0
    for block in iter_blocks(k, 1, N + 1, block_size):
        squares = block.values.astype(np.float64) ** 2
        n = np.arange(block.lo, block.hi, dtype=np.float64)
        partials.append(math.fsum((squares * n ** (-s)).tolist()))
        cumulative = running + np.cumsum(squares)
        running = float(cumulative[-1])
        window = n >= N / 2
        if np.any(window):
            nw = n[window]
            ratio = max(ratio, float(np.max(cumulative[window] / (nw * np.log(nw) ** m))))
    partial = math.fsum(partials)
    A = _TAIL_SAFETY * ratio

    with mpmath.workdps(_DPS):
        tail = s * A * mpmath.power(k, m + 1) * mpmath.gammainc(m + 1, mpmath.log(N) / k)
        lower = c_from_series(k, mpmath.mpf(partial))
        upper = c_from_series(k, mpmath.mpf(partial) + tail)
        mid = (lower + upper) / 2

    result = CkValue(
        k=k,
        value=float(mid),
        value_decimal=mpmath.nstr(mid, 30),
        method="direct-sum",
        error_bracket=(float(lower), float(upper)),
        parameters={"N": N, "partial_sum": partial, "tail_max": float(tail), "A_fitted": ratio,
                    "A_used": A, "safety_factor": _TAIL_SAFETY},
    )
    logger.info("C_%d (direct, N=%d) in [%.10g, %.10g]", k, N, *result.error_bracket)
    if tol is not None and result.width > tol:
        raise ConvergenceError(f"C_{k} direct tail bracket {result.width:.3g} exceeds tol {tol}; raise N")
    return result


@lru_cache(maxsize=None)
def ck_value(k: int) -> float:
    """The Euler-route C_k used by the detector and the moment ratios."""
    return ck_euler(k).value
