"""
Fixed-order Gauss–Legendre rules and sliding-window extrema.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights on [0, 1] (read-only arrays)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = (nodes + 1.0) / 2.0
    weights = weights / 2.0
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_points(left, right, order: int):
    """Quadrature abscissae and weights for many panels at once.

    Returns (points, weights) of shape (len(left), order).
    """
    nodes, weights = gauss_legendre(order)
    left = np.asarray(left, dtype=np.float64)
    width = np.asarray(right, dtype=np.float64) - left
    points = left[:, None] + width[:, None] * nodes[None, :]
    return points, width[:, None] * weights[None, :]


def sliding_max(values, window: int):
    """out[i] = max(values[i : i + window]) for every full window.

    Block prefix/suffix maxima, linear in len(values).
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if window <= 1:
        return values.copy()
    if window > n:
        return np.empty(0)
    blocks = -(-n // window)
    padded = np.full(blocks * window, -np.inf)
    padded[:n] = values
    grid = padded.reshape(blocks, window)
    prefix = np.maximum.accumulate(grid, axis=1).ravel()
    suffix = np.maximum.accumulate(grid[:, ::-1], axis=1)[:, ::-1].ravel()
    count = n - window + 1
    return np.maximum(suffix[:count], prefix[window - 1 : window - 1 + count])


def sliding_min(values, window: int):
    return -sliding_max(-np.asarray(values, dtype=np.float64), window)


def window_max(values, start, count):
    """
    out[i] = max(values[start[i] : start[i] + count[i]]), -inf for an empty window.

    Counts within one call should differ by a few units at most; the spread
    is covered one offset at a time.
    """
    values = np.asarray(values, dtype=np.float64)
    start = np.asarray(start, dtype=np.int64)
    count = np.asarray(count, dtype=np.int64)
    out = np.full(start.shape, -np.inf)
    if start.size == 0:
        return out
    width = int(count.min())
    if width >= 1:
        out = sliding_max(values, width)[start]
    for offset in range(max(width, 0), int(count.max())):
        extra = count > offset
        out[extra] = np.maximum(out[extra], values[start[extra] + offset])
    return out


def window_min(values, start, count):
    return -window_max(-np.asarray(values, dtype=np.float64), start, count)
