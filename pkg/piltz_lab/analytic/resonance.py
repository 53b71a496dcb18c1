"""
The truncated resonance sum

    Q_k(x; V) = x^((k-1)/2k) / (π √k) · Σ_{n <= V/x} d_k(n) n^(-(k+1)/2k) cos(2πk (nx)^(1/k) + (k-3)π/4)

and its comparison with Δ_k on [X, 2X].
"""
import logging
import math
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, model_validator

from piltz_lab.divisor.sieve import check_order, range_values
from piltz_lab.errors import DomainError
from piltz_lab.numerics import extended
from piltz_lab.numerics.extended import DoubleDouble

logger = logging.getLogger(__name__)


class ResonanceParams(BaseModel):
    """Cutoff V of the sum; when Y is given, V = (Y / 2π)^k."""

    k: int
    V: float
    Y: Optional[float] = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.V < 0:
            raise ValueError("V must be >= 0")
        if self.Y is not None:
            expected = (self.Y / (2 * math.pi)) ** self.k
            if abs(self.V - expected) > 1e-12 * max(1.0, expected):
                raise ValueError("V must equal (Y / 2π)^k")
        return self

    @classmethod
    def from_Y(cls, k: int, Y: float):
        return cls(k=k, V=(Y / (2 * math.pi)) ** k, Y=Y)


def resonance_phase(k: int, n, x):
    """
    2πk(nx)^(1/k) reduced to [0, 2π), from the fractional part of k(nx)^(1/k)
    taken in double-double.
    """
    n = np.asarray(n, dtype=np.float64)
    product = DoubleDouble(n, 0.0 * n) * float(x)
    root = extended.kth_root(product, k)
    return 2.0 * math.pi * extended.fractional_part(root * float(k))


def _terms(k: int, x: float, V: float):
    count = math.floor(V / x) if V >= x else 0
    if count < 1:
        return np.zeros(0), np.zeros(0)
    n = np.arange(1, count + 1, dtype=np.float64)
    d = range_values(k, 1, count + 1).astype(np.float64)
    weights = d * n ** (-(k + 1) / (2 * k))
    phase = resonance_phase(k, n, x) + (k - 3) * math.pi / 4
    return weights, weights * np.cos(phase)


def _prefactor(k: int, x: float) -> float:
    return x ** ((k - 1) / (2 * k)) / (math.pi * math.sqrt(k))


def qk_terms(k: int, x, V):
    """The summands of Q_k(x; V) with the prefactor applied, in ascending n."""
    check_order(k)
    if x < 1 or V < 0:
        raise DomainError(f"need x >= 1 and V >= 0, got x={x}, V={V}")
    _, terms = _terms(k, float(x), float(V))
    return _prefactor(k, float(x)) * terms


def qk_sum(k: int, x, V) -> float:
    return math.fsum(qk_terms(k, x, V).tolist())


def qk_envelope(k: int, x, V) -> float:
    """The triangle-inequality bound on |Q_k(x; V)|."""
    check_order(k)
    weights, _ = _terms(k, float(x), float(V))
    return _prefactor(k, float(x)) * math.fsum(weights.tolist())


class QkComparison(BaseModel):
    k: int
    X: float
    Y: float
    V: float
    samples: int
    seed: int
    rms_delta: float
    rms_residual: float
    correlation: Optional[float]
    x: List[float]
    delta: List[float]
    qk: List[float]

    def frame(self) -> pd.DataFrame:
        delta = np.array(self.delta)
        qk = np.array(self.qk)
        return pd.DataFrame({"x": self.x, "delta": delta, "qk": qk, "residual": delta - qk})


def default_Y(k: int, X: float) -> float:
    """Y with V = 100X, so every x in [X, 2X] sees between 50 and 100 terms."""
    return 2 * math.pi * (100 * X) ** (1 / k)


def stratified_points(a: float, b: float, samples: int, seed: int) -> np.ndarray:
    """One uniform point in each of `samples` equal strata of [a, b)."""
    rng = np.random.default_rng(seed)
    width = (b - a) / samples
    return a + (np.arange(samples) + rng.random(samples)) * width


def qk_delta_compare(k: int, X, Y, samples: int, evaluator, seed: int = 0) -> QkComparison:
    """RMS of Δ_k and of Δ_k - Q_k at stratified points of [X, 2X]."""
    if Y > X:
        raise DomainError(f"Y = {Y} must not exceed X = {X}")
    if samples < 2:
        raise DomainError("need at least two samples")
    params = ResonanceParams.from_Y(k, Y)
    xs = stratified_points(X, 2 * X, samples, seed)
    delta = evaluator.values_at(xs)
    qk = np.array([qk_sum(k, x, params.V) for x in xs])
    residual = delta - qk
    if np.any(qk != 0) and np.std(qk) > 0 and np.std(delta) > 0:
        correlation = float(np.corrcoef(delta, qk)[0, 1])
    else:
        correlation = None
    report = QkComparison(
        k=k, X=X, Y=Y, V=params.V, samples=samples, seed=seed,
        rms_delta=float(np.sqrt(np.mean(delta**2))),
        rms_residual=float(np.sqrt(np.mean(residual**2))),
        correlation=correlation,
        x=xs.tolist(), delta=delta.tolist(), qk=qk.tolist(),
    )
    logger.info("Q_%d vs Δ at X=%g: rms %.4g -> %.4g, corr %s", k, X, report.rms_delta,
                report.rms_residual, correlation)
    return report
