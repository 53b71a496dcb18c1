"""
Riemann zeta data on the real axis: ζ(s) for real s > 1 and the Stieltjes constants.

Both are evaluated by Euler–Maclaurin summation in mpmath and memoized; nothing
here is ever called per sample point.
"""
import logging
from functools import lru_cache

import mpmath

from piltz_lab.errors import ConvergenceError, DomainError
from piltz_lab.numerics.extended import DoubleDouble

logger = logging.getLogger(__name__)

MAX_STIELTJES_INDEX = 8
# Laurent products at the longer truncation order read a few constants further.
_MAX_SERIES_INDEX = 24
MAX_DIGITS = 30
_WORK_DPS = 60

# (cutoff M, number of Bernoulli corrections J) for the two truncation levels
_STIELTJES_LEVELS = ((60, 25), (80, 30))


def zeta_em(s, cutoff: int = 20, terms: int = 20):
    """ζ(s) for real s > 1, returned as an mpf."""
    with mpmath.workdps(_WORK_DPS):
        s = mpmath.mpf(s)
        if s <= 1:
            raise DomainError(f"zeta_em needs s > 1, got {s}")
        n = mpmath.mpf(cutoff)
        total = mpmath.fsum(mpmath.power(j, -s) for j in range(1, cutoff))
        total += mpmath.power(n, 1 - s) / (s - 1) + mpmath.power(n, -s) / 2
        rising = s  # s (s+1) ... (s+2j-2)
        for j in range(1, terms + 1):
            term = mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j) * rising
            total += term * mpmath.power(n, -s - 2 * j + 1)
            rising *= (s + 2 * j - 1) * (s + 2 * j)
        return +total


def _log_power_derivative(order: int, n: int, at):
    """d^order/dt^order of (log t)^n / t at t = at.

    Terms are kept as {(a, i): c} for c * t^-a * (log t)^i; one derivative maps
    t^-a L^i to t^(-a-1) (-a L^i + i L^(i-1)).
    """
    terms = {(1, n): mpmath.mpf(1)}
    for _ in range(order):
        nxt = {}
        for (a, i), c in terms.items():
            key = (a + 1, i)
            nxt[key] = nxt.get(key, 0) - a * c
            if i > 0:
                key = (a + 1, i - 1)
                nxt[key] = nxt.get(key, 0) + i * c
        terms = nxt
    log_at = mpmath.log(at)
    return mpmath.fsum(c * mpmath.power(at, -a) * log_at**i for (a, i), c in terms.items())


def _stieltjes_level(n: int, cutoff: int, corrections: int):
    m = mpmath.mpf(cutoff)
    head = mpmath.fsum(mpmath.log(j) ** n / j for j in range(2, cutoff))
    if n == 0:
        head += 1
    log_m = mpmath.log(m)
    value = head + (log_m**n / m) / 2 - log_m ** (n + 1) / (n + 1)
    for j in range(1, corrections + 1):
        weight = mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j)
        value -= weight * _log_power_derivative(2 * j - 1, n, m)
    return value


@lru_cache(maxsize=None)
def stieltjes_mpf(n: int):
    """γ_n as an mpf, accepted only when both truncation levels agree."""
    if not 0 <= n <= _MAX_SERIES_INDEX:
        raise DomainError(f"Stieltjes index must lie in [0, {_MAX_SERIES_INDEX}], got {n}")
    with mpmath.workdps(_WORK_DPS):
        first, second = (_stieltjes_level(n, m, j) for m, j in _STIELTJES_LEVELS)
        gap = abs(first - second)
        if gap > mpmath.mpf(10) ** -(MAX_DIGITS + 5):
            raise ConvergenceError(f"gamma_{n}: truncation levels differ by {mpmath.nstr(gap, 5)}")
        logger.debug("gamma_%d = %s (level gap %s)", n, mpmath.nstr(second, 32), mpmath.nstr(gap, 3))
        return +second


def stieltjes(n: int, digits: int = MAX_DIGITS) -> DoubleDouble:
    """γ_n rounded to `digits` significant digits, as a double-double."""
    if not 0 <= n <= MAX_STIELTJES_INDEX:
        raise DomainError(f"Stieltjes index must lie in [0, {MAX_STIELTJES_INDEX}], got {n}")
    if digits > MAX_DIGITS or digits < 1:
        raise DomainError(f"digits must lie in [1, {MAX_DIGITS}], got {digits}")
    value = stieltjes_mpf(n)
    with mpmath.workdps(_WORK_DPS):
        return DoubleDouble.from_str(mpmath.nstr(value, digits))
