"""
Power moments and the additive, multiplicative and sup shifts.
"""
import math

import numpy as np

from .base import DeltaFunctional, read

_SHAPE_NOTE = "implied constants are unspecified; ratios are bound-shape surrogates, not verifications"


class PowerMoment(DeltaFunctional):
    """Δ_k(x)^m."""

    kind = "power-moment"
    param_name = "m"

    def integrand(self, x, segments):
        return read(segments[0], x) ** self.params["m"]

    def bound_ratios(self, X, value):
        k, m = self.k, self.params["m"]
        a = (k - 1) / (2 * k)
        ratios = {}
        if m == 2 and k >= 2:
            from piltz_lab.analytic.constants import ck_value

            # (1/X) ∫_X^{2X} (C_k x^a)^2 dx
            reference = ck_value(k) ** 2 * (2 ** (2 * a + 1) - 1) * X ** (2 * a) / (2 * a + 1)
            ratios["tong"] = value / reference
        if m == 4:
            if k >= 2:
                ratios["X^(2-1/(k-1))"] = value / X ** (2 - 1 / (k - 1))
            if k == 3:
                ratios["X^(139/96)"] = value / X ** (139 / 96)
            ratios["X^(2-2/k)"] = value / X ** (2 - 2 / k)
        return ratios


class AdditiveShift(DeltaFunctional):
    """(Δ_k(x + h) - Δ_k(x))^2."""

    kind = "diff-h"
    param_name = "h"

    def maps(self):
        return [(1.0, 0.0), (1.0, float(self.params["h"]))]

    def integrand(self, x, segments):
        return (read(segments[1], x + self.params["h"]) - read(segments[0], x)) ** 2

    def bound_ratios(self, X, value):
        k, h = self.k, self.params["h"]
        ratios = {}
        if h <= 0:
            return ratios
        if k == 3:
            ratios["h*X^(1/6)"] = value / (h * X ** (1 / 6))
        if X > h * math.e:
            ratios["h*log^(k^2)(X/h)"] = value / (h * math.log(X / h) ** (k * k))
        if k == 2 and math.sqrt(X) > h * math.e:
            ratios["h*log^3(sqrt(X)/h)"] = value / (h * math.log(math.sqrt(X) / h) ** 3)
        return ratios


class MultiplicativeShift(DeltaFunctional):
    """(Δ_k(x·factor) - Δ_k(x))^2 with factor = 1 + 1/T (or 1 + β)."""

    kind = "diff-mult-T"
    param_name = "T"

    @classmethod
    def from_T(cls, k, T):
        return cls(k, {"T": float(T), "factor": 1.0 + 1.0 / T})

    @classmethod
    def from_beta(cls, k, beta):
        return cls(k, {"T": (1.0 / beta) if beta else math.inf, "factor": 1.0 + beta})

    def maps(self):
        return [(1.0, 0.0), (self.params["factor"], 0.0)]

    def integrand(self, x, segments):
        return (read(segments[1], x * self.params["factor"]) - read(segments[0], x)) ** 2

    def bound_ratios(self, X, value):
        T = self.params["T"]
        if not math.isfinite(T) or T <= 1:
            return {}
        return {"(X/T)*log^(k^2)(T)": value / ((X / T) * math.log(T) ** (self.k * self.k))}


class SupShift(DeltaFunctional):
    """
    sup_{0<=h<=H} (Δ_k(x + h) - Δ_k(x))^2, exactly.

    Δ_k decreases between integers, so over [x, x+H] its supremum is Δ_k(x)
    or a right limit Δ_k(m+), and its infimum is Δ_k(x+H) or a left limit
    Δ_k(m-), for integers m in (x, x+H].
    """

    kind = "sup-diff-H"
    param_name = "H"

    def maps(self):
        # the shifted map only places breakpoints; values come from one segment
        return [(1.0, 0.0), (1.0, float(self.params["H"]))]

    def segments_for(self, evaluator, a, b):
        return [evaluator.segment_covering(a, b + self.params["H"])]

    def candidates(self, x, segment):
        """Δ_k(x), Δ_k(x+H), max Δ_k(m+) and min Δ_k(m-) over integers m in (x, x+H]."""
        H = self.params["H"]
        x = np.asarray(x, dtype=np.float64)
        here = segment.values_at(x)
        there = segment.values_at(x + H)
        first = np.floor(x).astype(np.int64) + 1
        count = np.floor(x + H).astype(np.int64) - first + 1
        jump_top, jump_bottom = segment.window_extrema(first, count)
        return here, there, jump_top, jump_bottom

    def _squares(self, x, segment):
        here, there, jump_top, jump_bottom = self.candidates(x, segment)
        top = np.maximum(here, jump_top)
        bottom = np.minimum(np.minimum(here, there), jump_bottom)
        return (top - here) ** 2, (bottom - here) ** 2, here, there, jump_top, jump_bottom

    def integrand(self, x, segments):
        above, below, *_ = self._squares(x, segments[0])
        return np.maximum(above, below)

    def branch(self, x, segments):
        above, below, here, there, jump_top, jump_bottom = self._squares(x, segments[0])
        rises = (jump_top > here).astype(np.int64)
        low = np.minimum(there, jump_bottom)
        falls = np.where(low < here, np.where(jump_bottom <= there, 2, 1), 0)
        return rises + 2 * falls + 6 * (above >= below)

    def bound_ratios(self, X, value):
        k, H = self.k, self.params["H"]
        ratios = {}
        if k == 3:
            ratios["H*X^(1/6)"] = value / (H * X ** (1 / 6))
        ratios["H*log^(k^2+2)(X)"] = value / (H * math.log(X) ** (k * k + 2))
        return ratios


SHAPE_NOTE = _SHAPE_NOTE
