"""
Moments of Δ_k and mean squares of its shifts over [X, 2X].

Exact mode integrates every smooth piece of the integrand with fixed-order
Gauss–Legendre; sample mode draws one uniform point per stratum.
"""
import logging
import math
import time
from typing import Dict, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import integrate, stats

from piltz_lab.analytic.resonance import stratified_points
from piltz_lab.core.base import DeltaFunctional
from piltz_lab.core.functionals import (
    SHAPE_NOTE,
    AdditiveShift,
    MultiplicativeShift,
    PowerMoment,
    SupShift,
)
from piltz_lab.delta import DeltaEvaluator
from piltz_lab.errors import ConvergenceError, DomainError
from piltz_lab.numerics.quadrature import gauss_legendre, panel_points
from piltz_lab.parallel import map_ordered

logger = logging.getLogger(__name__)

Mode = Literal["exact", "sample"]

DEFAULT_ORDER = 8
CHECK_ORDER = 16
# one panel in this many is re-integrated at CHECK_ORDER
CHECK_EVERY = 100
CONFIDENCE = 0.95
SWITCH_PASSES = 4
_BISECTIONS = 60


# --- Pydantic Models ---
class MomentReport(BaseModel):
    k: int
    X: float
    kind: str
    param_name: Optional[str] = None
    param: Optional[float] = None
    shift: Optional[Literal["additive", "multiplicative", "sup"]] = None
    value: float
    mode: Literal["exact-quadrature", "stratified-sampling"]
    error_estimate: float
    units: int
    elapsed: float = 0.0
    samples: Optional[int] = None
    seed: Optional[int] = None
    ratios: Dict[str, float] = Field(default_factory=dict)
    note: str = SHAPE_NOTE

    def row(self) -> dict:
        return {
            "k": self.k, "X": self.X, "kind": self.kind, "param": self.param,
            "value": self.value, "error": self.error_estimate, "mode": self.mode,
            "elapsed": self.elapsed,
        }


class BoundParams(BaseModel):
    """Exponents and margins of the conditional bounds and the detector."""

    delta: float = 0.0
    epsilon: float = 0.01
    eta: float = 0.1
    xi: float = 0.01

    @model_validator(mode="after")
    def _positive(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        for name in ("epsilon", "eta", "xi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        return self


class SVCheck(BaseModel):
    k: int
    X: float
    h: float
    lhs: float
    rhs: float
    lhs_error: float
    rhs_error: float
    tol: float
    ok: bool
    beta_max: float
    inner_integrals: int


# --- Integration engines ---
def _pieces(evaluator: DeltaEvaluator, a: float, b: float, length: int):
    for c0, c1 in evaluator.chunks(a, b):
        lo = c0
        while lo < c1:
            hi = min(c1, lo + length)
            yield lo, hi
            lo = hi


def _panel_sums(functional, segments, left, right, order):
    points, weights = panel_points(left, right, order)
    values = functional.integrand(points.ravel(), segments).reshape(points.shape)
    return (values * weights).sum(axis=1), (np.abs(values) * weights).sum(axis=1)


def _split_at_switches(functional, segments, edges, order):
    """Add the points where the integrand changes branch inside a panel, by bisection."""
    nodes, _ = gauss_legendre(order)
    for _ in range(SWITCH_PASSES):
        left, right = edges[:-1], edges[1:]
        samples_at = np.concatenate([left[:, None], left[:, None] + (right - left)[:, None] * nodes[None, :]], axis=1)
        codes = functional.branch(samples_at.ravel(), segments).reshape(samples_at.shape)
        changed = codes != codes[:, :1]
        flagged = np.flatnonzero(changed.any(axis=1))
        if flagged.size == 0:
            break
        j = changed[flagged].argmax(axis=1)
        lo, hi = samples_at[flagged, j - 1], samples_at[flagged, j]
        code = codes[flagged, 0]
        for _ in range(_BISECTIONS):
            mid = 0.5 * (lo + hi)
            same = functional.branch(mid, segments) == code
            lo, hi = np.where(same, mid, lo), np.where(same, hi, mid)
        edges = np.unique(np.concatenate([edges, hi]))
    return edges


def _integrate_piece(functional, evaluator, lo, hi, order, check_every):
    """(integral, refinement delta, Σ|w f|, panels) over one piece."""
    segments = functional.segments_for(evaluator, lo, hi)
    edges = np.unique(np.concatenate([[lo], functional.breakpoints(lo, hi), [hi]]))
    if functional.branch(np.array([lo]), segments) is not None:
        edges = _split_at_switches(functional, segments, edges, order)
    left, right = edges[:-1], edges[1:]
    sums, magnitude = _panel_sums(functional, segments, left, right, order)
    checked = slice(0, None, check_every)
    fine, _ = _panel_sums(functional, segments, left[checked], right[checked], CHECK_ORDER)
    drift = math.fsum(np.abs(fine - sums[checked]).tolist())
    drift *= left.size / max(1, fine.size)
    return math.fsum(sums.tolist()), drift, math.fsum(magnitude.tolist()), int(left.size)


def integrate_exact(functional: DeltaFunctional, evaluator: DeltaEvaluator, a: float, b: float,
                    order: int = DEFAULT_ORDER, threads: int = 1, check_every: int = CHECK_EVERY):
    """
    ∫_a^b of the functional's integrand.

    Returns (integral, error_estimate, panels). The error estimate is the
    order-vs-CHECK_ORDER drift on every `check_every`-th panel, scaled to all
    panels, floored at 1e-12·∫|f|.
    """
    if b < a:
        raise DomainError(f"empty range [{a}, {b}]")
    length = max(1, evaluator.block_size // 2)
    units = [(functional, evaluator, lo, hi, order, check_every) for lo, hi in _pieces(evaluator, a, b, length)]
    parts = map_ordered(_integrate_piece, units, threads)
    integral = math.fsum(p[0] for p in parts)
    drift = math.fsum(p[1] for p in parts)
    magnitude = math.fsum(p[2] for p in parts)
    panels = sum(p[3] for p in parts)
    return integral, max(drift, 1e-12 * magnitude), panels


def _group_bounds(evaluator, xs):
    cells = (np.floor(xs).astype(np.int64) - 1) // evaluator.stride
    edges = np.flatnonzero(np.diff(cells)) + 1
    return np.split(np.arange(xs.size), edges)


def integrate_sampled(functional: DeltaFunctional, evaluator: DeltaEvaluator, a: float, b: float,
                      samples: int, seed: int):
    """
    ∫_a^b by stratified sampling, one point per stratum.

    Returns (integral, confidence half-width, samples); the variance comes
    from collapsing adjacent strata in pairs.
    """
    if samples < 2:
        raise DomainError("sample mode needs at least two samples")
    xs = stratified_points(a, b, samples, seed)
    values = np.empty(samples)
    for group in _group_bounds(evaluator, xs):
        pts = xs[group]
        segments = functional.segments_for(evaluator, float(pts[0]), float(pts[-1]))
        values[group] = functional.integrand(pts, segments)
    width = b - a
    mean = math.fsum(values.tolist()) / samples
    pairs = samples // 2
    diffs = values[0 : 2 * pairs : 2] - values[1 : 2 * pairs : 2]
    variance = math.fsum((diffs**2).tolist()) / samples**2
    half_width = stats.norm.ppf(0.5 + CONFIDENCE / 2) * math.sqrt(variance) * width
    return mean * width, half_width, samples


# --- Reports ---
def _shift_of(functional):
    if isinstance(functional, AdditiveShift):
        return "additive"
    if isinstance(functional, MultiplicativeShift):
        return "multiplicative"
    if isinstance(functional, SupShift):
        return "sup"
    return None


def measure(functional: DeltaFunctional, X: float, reach: float, mode: Mode = "exact", samples: int = 1000,
            seed: int = 0, evaluator: DeltaEvaluator = None, order: int = DEFAULT_ORDER,
            threads: int = 1) -> MomentReport:
    """(1/X)∫_X^{2X} of the functional, evaluated in the requested mode."""
    if X < 1:
        raise DomainError(f"X must be >= 1, got {X}")
    k = functional.k
    if evaluator is None:
        evaluator = DeltaEvaluator.covering(k, reach)
    started = time.perf_counter()
    if mode == "exact":
        integral, error, units = integrate_exact(functional, evaluator, X, 2 * X, order=order, threads=threads)
        mode_name = "exact-quadrature"
    elif mode == "sample":
        integral, error, units = integrate_sampled(functional, evaluator, X, 2 * X, samples, seed)
        mode_name = "stratified-sampling"
    else:
        raise DomainError(f"unknown mode {mode!r}")
    value = integral / X
    report = MomentReport(
        k=k, X=X, kind=functional.kind, param_name=functional.param_name,
        param=functional.param, shift=_shift_of(functional),
        value=value, mode=mode_name, error_estimate=error / X, units=units,
        elapsed=time.perf_counter() - started,
        samples=samples if mode == "sample" else None,
        seed=seed if mode == "sample" else None,
        ratios=functional.bound_ratios(X, value) if value != 0 else {},
    )
    logger.info("%s k=%d X=%g %s=%s: %.6g +/- %.2g (%s, %d units)", report.kind, k, X,
                report.param_name, report.param, value, report.error_estimate, mode_name, units)
    return report


def power_moment(k: int, X, m: int, mode: Mode = "exact", **kwargs) -> MomentReport:
    if m not in (1, 2, 3, 4):
        raise DomainError(f"m must be in 1..4, got {m}")
    return measure(PowerMoment(k, {"m": m}), X, 2 * X, mode, **kwargs)


def diff_mean_square(k: int, X, h, mode: Mode = "exact", **kwargs) -> MomentReport:
    """(1/X)∫_X^{2X} (Δ_k(x+h) - Δ_k(x))² dx for 0 <= h <= X/8."""
    if h < 0 or h > X / 8:
        raise DomainError(f"h must lie in [0, X/8], got h={h} for X={X}")
    functional = AdditiveShift(k, {"h": float(h)})
    if h == 0:
        return MomentReport(
            k=k, X=X, kind=functional.kind, param_name="h", param=0.0, shift="additive",
            value=0.0, mode="exact-quadrature" if mode == "exact" else "stratified-sampling",
            error_estimate=0.0, units=0,
        )
    return measure(functional, X, 2 * X + h, mode, **kwargs)


def mult_diff_mean_square(k: int, X, T, mode: Mode = "exact", **kwargs) -> MomentReport:
    """(1/X)∫_X^{2X} (Δ_k(x + x/T) - Δ_k(x))² dx for T >= 2."""
    if T < 2:
        raise DomainError(f"T must be >= 2, got {T}")
    return measure(MultiplicativeShift.from_T(k, T), X, 2 * X * (1 + 1 / T), mode, **kwargs)


def sup_diff_mean_square(k: int, X, H, mode: Mode = "exact", **kwargs) -> MomentReport:
    """(1/X)∫_X^{2X} sup_{0<=h<=H} (Δ_k(x+h) - Δ_k(x))² dx for 1 <= H <= X/8."""
    if H < 1 or H > X / 8:
        raise DomainError(f"H must lie in [1, X/8], got H={H} for X={X}")
    return measure(SupShift(k, {"H": float(H)}), X, 2 * X + H, mode, **kwargs)


def saffari_vaughan_check(k: int, X, h, tol: float = 0.01, evaluator: DeltaEvaluator = None,
                          order: int = DEFAULT_ORDER) -> SVCheck:
    """
    ∫_{X/2}^X |f(t+h) - f(t)|² dt <= (2X/h) ∫_0^{8h/X} ∫_0^X |f(t+βt) - f(t)|² dt dβ
    with f = Δ_k, taken as 0 below 1.
    """
    if X < 2:
        raise DomainError(f"X must be >= 2, got {X}")
    if h <= 0 or h > X / 4:
        raise DomainError(f"h must lie in (0, X/4], got h={h} for X={X}")
    beta_max = 8 * h / X
    if evaluator is None:
        evaluator = DeltaEvaluator.covering(k, X * (1 + beta_max) + 1)
    lhs, lhs_error, _ = integrate_exact(AdditiveShift(k, {"h": float(h)}), evaluator, X / 2, X, order=order)

    inner_errors = []

    def inner(beta):
        if beta <= 0:
            return 0.0
        value, error, _ = integrate_exact(MultiplicativeShift.from_beta(k, beta), evaluator, 0.0, X, order=order)
        inner_errors.append(error)
        return value

    outcome = integrate.quad(inner, 0.0, beta_max, epsrel=tol / 10, limit=200, full_output=1)
    outer, outer_error = outcome[0], outcome[1]
    if len(outcome) > 3:
        if outer_error > tol * abs(outer):
            raise ConvergenceError(f"outer β-integral did not converge: {outcome[3]}")
        logger.warning("quad reported %r with error %.3g on %.6g", outcome[3], outer_error, outer)
    scale = 2 * X / h
    rhs = scale * outer
    rhs_error = scale * (outer_error + beta_max * max(inner_errors, default=0.0))
    ok = lhs <= rhs * (1 + tol) + lhs_error + rhs_error
    result = SVCheck(
        k=k, X=X, h=h, lhs=lhs, rhs=rhs, lhs_error=lhs_error, rhs_error=rhs_error, tol=tol,
        ok=bool(ok), beta_max=beta_max, inner_integrals=len(inner_errors),
    )
    logger.info("Saffari-Vaughan k=%d X=%g h=%g: %.6g <= %.6g ? %s", k, X, h, lhs, rhs, result.ok)
    return result

