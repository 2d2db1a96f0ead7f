"""Deterministic reductions and tiny regression helpers.

Grid averages everywhere in this package go through a pairwise tree in
index order.  The tree shape depends only on the array length, never on
how callers partition work, so results are bitwise reproducible.
"""

from __future__ import annotations

import math

import numpy as np


def pairwise_sum(values) -> float:
    """Sum with a fixed-shape pairwise tree over the index order."""
    a = np.asarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        return 0.0
    while a.size > 1:
        half = a.size // 2
        paired = a[0 : 2 * half : 2] + a[1 : 2 * half : 2]
        if a.size % 2:
            paired = np.concatenate([paired, a[-1:]])
        a = paired
    return float(a[0])


def pairwise_mean(values) -> float:
    a = np.asarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("mean of an empty array")
    return pairwise_sum(a) / a.size


def linear_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line y = slope*x + intercept.

    Returns (slope, intercept, rms_residual).  Closed form with pairwise
    sums, so the result does not depend on any linear-algebra backend.
    """
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.size != ya.size or xa.size < 2:
        raise ValueError("linear_fit needs at least two points")
    xbar = pairwise_mean(xa)
    ybar = pairwise_mean(ya)
    dx = xa - xbar
    dy = ya - ybar
    sxx = pairwise_sum(dx * dx)
    if sxx == 0.0:
        raise ValueError("linear_fit: degenerate abscissae")
    slope = pairwise_sum(dx * dy) / sxx
    intercept = ybar - slope * xbar
    resid = ya - (slope * xa + intercept)
    rms = math.sqrt(pairwise_mean(resid * resid))
    return slope, intercept, rms
