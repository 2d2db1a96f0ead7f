"""Torus geometry, shifts, quadrature grids, and Diophantine scans.

Points live on the d-torus with coordinates reduced to [0, 1).  All
reductions that need a nearest integer use round-half-to-even so the
behaviour is deterministic across platforms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError

DEFAULT_LATTICE_BUDGET = 4_000_000


def _reduce_mod_1(values: np.ndarray) -> np.ndarray:
    """Map reals into [0, 1); guards the x - floor(x) == 1.0 corner."""
    r = values - np.floor(values)
    return np.where(r >= 1.0, r - 1.0, r)


@dataclass(frozen=True)
class TorusPoint:
    """A point on the d-torus, coordinates reduced to [0, 1)."""

    coords: tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) < 1:
            raise ValueError("torus point needs dimension >= 1")
        reduced = tuple(float(c) for c in _reduce_mod_1(np.asarray(self.coords, dtype=np.float64)))
        object.__setattr__(self, "coords", reduced)

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=np.float64)


def as_point(x) -> TorusPoint:
    if isinstance(x, TorusPoint):
        return x
    if np.isscalar(x):
        return TorusPoint((float(x),))
    return TorusPoint(tuple(float(c) for c in np.asarray(x, dtype=np.float64).ravel()))


@dataclass(frozen=True)
class Frequency:
    """Torus rotation vector with Diophantine metadata (tau, sigma)."""

    omega: tuple[float, ...]
    tau: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if len(self.omega) < 1:
            raise ValueError("frequency needs dimension >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.sigma >= 1:
            raise ValueError("sigma must be >= 1")
        reduced = tuple(float(c) for c in _reduce_mod_1(np.asarray(self.omega, dtype=np.float64)))
        object.__setattr__(self, "omega", reduced)

    @property
    def dimension(self) -> int:
        return len(self.omega)

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.omega, dtype=np.float64)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform lattice {(j1/M, ..., jd/M)} with M^d nodes, anchored at 0.

    The grid mean of a 1-periodic trigonometric polynomial of degree
    below M equals its zeroth Fourier coefficient, so these lattices
    double as exact quadrature rules at trig-polynomial resolution.
    """

    points_per_dim: int
    dimension: int = 1

    def __post_init__(self):
        if self.points_per_dim < 1:
            raise ValueError("points_per_dim must be >= 1")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def node_count(self) -> int:
        return self.points_per_dim**self.dimension

    def points(self) -> np.ndarray:
        """All nodes as an (M^d, d) array in row-major index order."""
        m, d = self.points_per_dim, self.dimension
        axes = [np.arange(m, dtype=np.float64) / m] * d
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([ax.ravel() for ax in mesh], axis=-1)


def shift(x, omega: Frequency, steps: int) -> TorusPoint:
    """x + steps * omega reduced mod 1, coordinatewise."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    p = as_point(x)
    if p.dimension != omega.dimension:
        raise ValueError("dimension mismatch between point and frequency")
    return TorusPoint(tuple(_reduce_mod_1(p.vec + steps * omega.vec)))


def orbit_points(x, omega: Frequency, steps: int) -> np.ndarray:
    """Points x, x+w, ..., x+(steps-1)w via sequential reduced addition.

    This is the exact update rule used inside the transfer-product
    kernels, so oracles replaying a product see identical floats.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    p = as_point(x)
    out = np.empty((steps, p.dimension), dtype=np.float64)
    cur = p.vec.copy()
    w = omega.vec
    for j in range(steps):
        out[j] = cur
        cur = _reduce_mod_1(cur + w)
    return out


def torus_norm(t: float) -> float:
    """Distance from t to the nearest integer, in [0, 1/2]."""
    t = float(t)
    return abs(t - np.rint(t))


def _canonical_lattice(K: int, dimension: int, budget: int):
    """Nonzero lattice vectors with |k|_inf <= K, one per +-k pair.

    Yields the representative whose first nonzero coordinate is
    positive, in ascending lexicographic order.  The scan visits
    (2K+1)^d lattice points, so the budget guards combinatorial blowup.
    """
    total = (2 * K + 1) ** dimension
    if total > budget:
        raise BudgetError(
            f"lattice scan of (2K+1)^d = {total} points exceeds budget {budget}"
        )
    for k in itertools.product(range(-K, K + 1), repeat=dimension):
        for c in k:
            if c > 0:
                yield k
                break
            if c < 0:
                break


def min_torus_norm(
    omega: Frequency, K: int, budget: int = DEFAULT_LATTICE_BUDGET
) -> tuple[float, tuple[int, ...]]:
    """Minimum of ||k . omega|| over 0 < |k|_inf <= K, with a minimizer.

    Norms come in +-k pairs; the reported argmin is the canonical
    representative (first nonzero coordinate positive), ties broken by
    ascending lexicographic order, independent of any work partition.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    w = omega.vec
    best = np.inf
    best_k: tuple[int, ...] | None = None
    for k in _canonical_lattice(K, omega.dimension, budget):
        val = torus_norm(float(np.dot(k, w)))
        if val < best:
            best = val
            best_k = k
    assert best_k is not None
    return best, best_k


def check_diophantine(
    omega: Frequency, K: int, budget: int = DEFAULT_LATTICE_BUDGET
) -> tuple[bool, tuple[int, ...] | None]:
    """Verify ||k . omega|| > tau * |k|^-sigma for all 0 < |k|_inf <= K.

    Returns (True, None) when the bound holds, otherwise (False, k) for
    the first violating canonical k in ascending lexicographic order.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    w = omega.vec
    for k in _canonical_lattice(K, omega.dimension, budget):
        kinf = max(abs(c) for c in k)
        if not torus_norm(float(np.dot(k, w))) > omega.tau * kinf ** (-omega.sigma):
            return False, k
    return True, None
