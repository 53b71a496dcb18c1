"""
Functionals of Δ_k and the breakpoint bookkeeping the moment engine relies on.
"""
import math

import numpy as np


class DeltaFunctional:
    """
    A function of Δ_k whose mean over [X, 2X] the engine computes.

    A functional reads Δ_k at x and at the images of x under a few increasing
    affine maps y = alpha·x + beta; its integrand is smooth between the
    preimages of integers under those maps.
    """

    kind = None
    param_name = None

    def __init__(self, k, params=None):
        self.k = k
        self.params = params or {}

    @property
    def param(self):
        return self.params.get(self.param_name) if self.param_name else None

    def maps(self):
        """
        Affine maps whose Δ_k values the integrand reads.

        Returns:
            list of (alpha, beta) pairs; the identity comes first.
        """
        return [(1.0, 0.0)]

    def reach(self):
        """Extra length read past every mapped point."""
        return 0.0

    def breakpoints(self, a, b):
        """Points of (a, b) where the integrand may jump: preimages of integers >= 1."""
        found = []
        for alpha, beta in self.maps():
            first = max(1, math.floor(alpha * a + beta) + 1)
            last = math.ceil(alpha * b + beta) - 1
            if last >= first:
                m = np.arange(first, last + 1, dtype=np.float64)
                found.append((m - beta) / alpha)
        if not found:
            return np.zeros(0)
        points = np.concatenate(found)
        return points[(points > a) & (points < b)]

    def segments_for(self, evaluator, a, b):
        """One DeltaSegment per map, covering the image of [a, b] plus the reach."""
        reach = self.reach()
        return [
            evaluator.segment_covering(alpha * a + beta, alpha * b + beta + reach)
            for alpha, beta in self.maps()
        ]

    def integrand(self, x, segments):
        """
        Returns:
            values: np.ndarray - the integrand at every point of x
        """
        raise NotImplementedError

    def branch(self, x, segments):
        """
        Label of the smooth branch the integrand follows at each x, or None
        when it is smooth between breakpoints.
        """
        return None

    def bound_ratios(self, X, value):
        """Value against the bound shapes quoted for this quantity."""
        return {}


def read(segment, points):
    """Δ_k at points through a segment that may be None (image entirely below 1)."""
    if segment is None:
        return np.zeros(np.shape(points))
    return segment.values_at(points)
