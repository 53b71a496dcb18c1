"""
The main term x·P_k(log x) of S_k(x), the residue of ζ^k(s) x^s / s at s = 1.
"""
import logging
from functools import lru_cache
from math import factorial

import mpmath
import numpy as np

from piltz_lab.divisor.sieve import check_order
from piltz_lab.errors import ConvergenceError, DomainError
from piltz_lab.numerics import extended
from piltz_lab.numerics.extended import DoubleDouble
from piltz_lab.numerics.zeta import MAX_DIGITS, stieltjes_mpf

logger = logging.getLogger(__name__)

_SERIES_DPS = 45
_AGREEMENT_DIGITS = 25


class MainTermPoly:
    """
    P_k(L) = Σ_j coeffs[j] L^j of degree k - 1.

    coeffs are double-doubles; coeffs_float mirrors them in float64 for the
    cancellation-free increment formulas that never need more.
    """

    def __init__(self, k: int, coeffs, gammas, order: int):
        self.k = k
        self.coeffs = list(coeffs)
        self.gammas = list(gammas)
        self.order = order
        self.coeffs_float = np.array([float(c) for c in self.coeffs])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, L):
        """P_k(L) in double-double (L a DoubleDouble, float or array)."""
        L = DoubleDouble.coerce(L)
        acc = self.coeffs[-1] + 0.0 * L.hi
        for c in reversed(self.coeffs[:-1]):
            acc = acc * L + c
        return acc

    def evaluate_float(self, L):
        return np.polynomial.polynomial.polyval(L, self.coeffs_float)

    def derivative_float(self, L):
        """P_k'(L) in float64."""
        return np.polynomial.polynomial.polyval(L, np.polynomial.polynomial.polyder(self.coeffs_float))

    def to_json(self, digits: int = MAX_DIGITS) -> dict:
        return {
            "k": self.k,
            "truncation_order": self.order,
            "coeffs": [c.to_decimal(digits) for c in self.coeffs],
            "gammas": [{"n": n, "value": g.to_decimal(digits), "digits": digits} for n, g in enumerate(self.gammas)],
        }

    def __repr__(self):
        return f"MainTermPoly(k={self.k}, coeffs={[float(c) for c in self.coeffs]})"


# --- Laurent series ---
def _series_mul(a, b, order):
    out = [mpmath.mpf(0)] * (order + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j in range(order + 1 - i):
            out[i + j] += ai * b[j]
    return out


def _laurent_coeffs(k: int, order: int):
    """Mp coefficients c_0..c_{k-1} of P_k from series truncated at w^order."""
    with mpmath.workdps(_SERIES_DPS):
        # w·ζ(1 + w) = 1 + Σ_n (-1)^n γ_n w^(n+1) / n!
        w_zeta = [mpmath.mpf(1)] + [
            (-1) ** n * stieltjes_mpf(n) / mpmath.factorial(n) for n in range(order)
        ]
        power = [mpmath.mpf(1)] + [mpmath.mpf(0)] * order
        for _ in range(k):
            power = _series_mul(power, w_zeta, order)
        inverse_s = [mpmath.mpf((-1) ** m) for m in range(order + 1)]
        series = _series_mul(power, inverse_s, order)
        # a_{-1-j} is the coefficient of w^(k-1-j) in w^k ζ^k / s.
        return [series[k - 1 - j] / mpmath.factorial(j) for j in range(k)]


@lru_cache(maxsize=None)
def main_term_coeffs(k: int) -> MainTermPoly:
    """P_k from the Laurent expansion, checked against a longer truncation."""
    check_order(k)
    short_order, long_order = 2 * k, 2 * k + 4
    short = _laurent_coeffs(k, short_order)
    long = _laurent_coeffs(k, long_order)
    with mpmath.workdps(_SERIES_DPS):
        for j, (a, b) in enumerate(zip(short, long)):
            if abs(a - b) > mpmath.mpf(10) ** -_AGREEMENT_DIGITS * max(1, abs(b)):
                raise ConvergenceError(f"P_{k} coefficient c_{j} differs between truncation orders")
        gammas = [DoubleDouble.from_mpf(stieltjes_mpf(n)) for n in range(max(k - 1, 1))]
        coeffs = [DoubleDouble.from_mpf(c) for c in short]
    if abs(float(coeffs[-1]) - 1.0 / factorial(k - 1)) > 1e-15:
        raise ConvergenceError(f"P_{k} leading coefficient is not 1/(k-1)!")
    logger.debug("P_%d coefficients %s", k, [float(c) for c in coeffs])
    return MainTermPoly(k, coeffs, gammas, short_order)


def main_term_value(k: int, x) -> DoubleDouble:
    """x·P_k(log x) in double-double. x may be a float, int, DoubleDouble or array."""
    poly = main_term_coeffs(k)
    if isinstance(x, DoubleDouble):
        xd = x
    elif isinstance(x, np.ndarray) and x.dtype.kind in "iu":
        xd = DoubleDouble.from_int(x.astype(np.int64))
    else:
        xd = DoubleDouble.coerce(x)
    if np.any(np.asarray(xd.hi) < 1.0):
        raise DomainError("main_term_value needs x >= 1")
    return xd * poly.evaluate(extended.log(xd))


def main_term_increment(poly: MainTermPoly, n, t):
    """
    M(n + t) - M(n) for M(y) = y·P_k(log y), in float64 without cancellation.

    With L0 = log n and L1 = log(n + t) = L0 + u,
    M(n+t) - M(n) = t·P(L1) + n·u·Σ_j c_j Σ_{i<j} L1^i L0^(j-1-i).
    """
    n = np.asarray(n, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    L0 = np.log(n)
    u = np.log1p(t / n)
    L1 = L0 + u
    c = poly.coeffs_float
    divided = np.zeros(np.broadcast(L0, L1).shape)
    q = np.ones_like(divided)  # Σ_{i<j} L1^i L0^(j-1-i) for j = 1
    L1_power = np.ones_like(divided)
    for j in range(1, len(c)):
        divided = divided + c[j] * q
        L1_power = L1_power * L1
        q = L0 * q + L1_power
    return t * poly.evaluate_float(L1) + n * u * divided


def main_term_derivative(poly: MainTermPoly, x):
    """M'(x) = P(log x) + P'(log x)."""
    L = np.log(np.asarray(x, dtype=np.float64))
    return poly.evaluate_float(L) + poly.derivative_float(L)
