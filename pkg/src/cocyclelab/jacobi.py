"""Jacobi operator truncations, eigenvalue counting, and the IDS.

The operator acts on l^2(Z) by

  (H psi)(n) = conj(a)(x + (n-1)w) psi(n-1) + a(x + nw) psi(n+1)
               + v(x + nw) psi(n),

so the bond between sites n and n+1 carries a(x + nw).  Truncations to
the window [-N, N] are Hermitian tridiagonal; eigenvalue counts use the
inertia (Sturm pivot) recurrence, which keeps the mathematical core
free of external linear-algebra dependencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cocycle import TrigPoly, jacobi_cocycle
from .errors import SingularPointError
from .lyapunov import CLAMP_T, finite_le
from .reduction import linear_fit, pairwise_mean
from .torus import Frequency, TorusGrid, as_point

PIVOT_FLOOR = 1e-300
COLLISION_SHIFT = 1e-12
EIGEN_CLAMP = 1e-9


@dataclass(frozen=True)
class JacobiFamily:
    """Quasi-periodic Jacobi coefficients: off-diagonal a, diagonal v."""

    a: TrigPoly
    v: TrigPoly
    omega: Frequency

    def __post_init__(self):
        if self.a.dimension != self.v.dimension or self.a.dimension != self.omega.dimension:
            raise ValueError("dimension mismatch among a, v, omega")
        if self.a.is_zero(tol=0.0):
            raise SingularPointError("off-diagonal coefficient a is identically zero")
        if not self.v.is_real_on_torus():
            raise ValueError("diagonal coefficient v must be real on the torus")

    @property
    def dimension(self) -> int:
        return self.a.dimension


@dataclass(frozen=True)
class TruncatedOperator:
    """Hermitian tridiagonal restriction to the window [-N, N].

    diag[m] = v(x + (m-N) w) and offdiag[m] couples sites m-N and
    m-N+1 with value a(x + (m-N) w); the conjugate enters on the lower
    side, so the matrix is Hermitian by construction.
    """

    diag: np.ndarray
    offdiag: np.ndarray
    window: int
    x: tuple[float, ...]

    @property
    def size(self) -> int:
        return self.diag.size


def truncate(fam: JacobiFamily, x, N: int) -> TruncatedOperator:
    if N < 0:
        raise ValueError("N must be >= 0")
    p = as_point(x)
    n = 2 * N + 1
    w = fam.omega.vec
    sites = (np.arange(n, dtype=np.float64) - N)[:, None] * w[None, :] + p.vec[None, :]
    sites -= np.floor(sites)
    diag_vals = fam.v.evaluate_many(sites)
    if np.max(np.abs(diag_vals.imag)) > 1e-9 * max(1.0, np.max(np.abs(diag_vals.real))):
        raise ValueError("diagonal samples are not real")
    off_vals = fam.a.evaluate_many(sites[:-1])
    return TruncatedOperator(
        diag=diag_vals.real.astype(np.float64),
        offdiag=off_vals.astype(np.complex128),
        window=N,
        x=p.coords,
    )


def _count_below_batch(diag: np.ndarray, absoff2: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """Inertia counts #{eigenvalues < E} for a batch of energies.

    Pivot recurrence d_m = (diag_m - E) - |off_{m-1}|^2 / d_{m-1};
    pivots with |d| < 1e-300 are replaced by -1e-300 (bisection-safe
    convention), and negative pivots are counted.
    """
    e = np.asarray(energies, dtype=np.float64).ravel()
    d = diag[0] - e
    d = np.where(np.abs(d) < PIVOT_FLOOR, -PIVOT_FLOOR, d)
    counts = (d < 0).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for m in range(1, diag.size):
            d = (diag[m] - e) - absoff2[m - 1] / d
            d = np.where(np.abs(d) < PIVOT_FLOOR, -PIVOT_FLOOR, d)
            counts += d < 0
    return counts


def eigen_count_below(T: TruncatedOperator, E: float) -> int:
    """Number of eigenvalues strictly below E (E away from eigenvalues)."""
    absoff2 = np.abs(T.offdiag) ** 2
    return int(_count_below_batch(T.diag, absoff2, np.asarray([E]))[0])


def _gershgorin_interval(T: TruncatedOperator) -> tuple[float, float]:
    r = np.zeros(T.size)
    absoff = np.abs(T.offdiag)
    r[:-1] += absoff
    r[1:] += absoff
    return float(np.min(T.diag - r)), float(np.max(T.diag + r))


def tridiag_eigenvalues(T: TruncatedOperator, tol: float = 1e-10) -> np.ndarray:
    """All eigenvalues by bisection on the inertia counts.

    Bisection runs for every eigenvalue index in parallel, so each
    sweep costs one batched pivot recurrence.
    """
    n = T.size
    absoff2 = np.abs(T.offdiag) ** 2
    lo0, hi0 = _gershgorin_interval(T)
    lo = np.full(n, lo0 - tol)
    hi = np.full(n, hi0 + tol)
    idx = np.arange(n)
    while float(np.max(hi - lo)) > tol:
        mid = 0.5 * (lo + hi)
        counts = _count_below_batch(T.diag, absoff2, mid)
        go_up = counts <= idx
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    return 0.5 * (lo + hi)


def _guarded_count(T: TruncatedOperator, E: float) -> float:
    """Eigenvalue count with the symmetric +-1e-12 collision guard.

    At an exact eigenvalue collision the two shifted counts differ and
    their average is a half-integer; away from collisions it is the
    plain integer count.
    """
    absoff2 = np.abs(T.offdiag) ** 2
    pair = _count_below_batch(T.diag, absoff2, np.asarray([E - COLLISION_SHIFT, E + COLLISION_SHIFT]))
    return 0.5 * float(pair[0] + pair[1])


@dataclass(frozen=True)
class IDSReport:
    """Normalized eigenvalue count of one truncation over [E1, E2).

    count uses the collision-guarded counter, so it is an integer
    except when a window endpoint sits on an eigenvalue, where it may
    be a half-integer.
    """

    E1: float
    E2: float
    N: int
    count: float
    k_value: float
    x: tuple[float, ...]


def ids(fam: JacobiFamily, x, E1: float, E2: float, N: int, x_average: int = 1) -> IDSReport:
    """(count below E2 - count below E1) / (2N + 1) at the base point x.

    The infinite-volume object is almost-everywhere constant in x, so a
    single base point is the default; x_average = 5 averages over five
    diagonally shifted base points to expose the finite-N x-dependence.
    """
    if not E1 < E2:
        raise ValueError("need E1 < E2")
    if N < 1:
        raise ValueError("N must be >= 1")
    if x_average not in (1, 5):
        raise ValueError("x_average must be 1 or 5")
    p = as_point(x)
    counts = []
    for j in range(x_average):
        base = p.vec + j / 5.0
        T = truncate(fam, base, N)
        counts.append(_guarded_count(T, E2) - _guarded_count(T, E1))
    count = float(np.mean(counts))
    return IDSReport(E1=E1, E2=E2, N=N, count=count, k_value=count / (2 * N + 1), x=p.coords)


@dataclass(frozen=True)
class ThoulessReport:
    """Transfer-matrix exponent against its log-potential reconstruction."""

    L_transfer: float
    L_thouless: float
    gap: float
    clamped_terms: int


def _mean_log_a(fam: JacobiFamily, grid: TorusGrid) -> float:
    avals = np.abs(fam.a.evaluate_many(grid.points()))
    with np.errstate(divide="ignore"):
        log_a = np.log(avals)
    log_a = np.where(log_a < -CLAMP_T, -CLAMP_T, log_a)
    return pairwise_mean(log_a)


def _thouless_at_energy(fam, E, N, grid, eigs, mean_log_a) -> ThoulessReport:
    gaps = np.abs(E - eigs)
    clamped = gaps < EIGEN_CLAMP
    terms = np.log(np.where(clamped, EIGEN_CLAMP, gaps))
    log_potential = pairwise_mean(terms)
    cocycle = jacobi_cocycle(fam.a, fam.v, E, fam.omega)
    l_transfer = finite_le(cocycle, fam.omega, N, grid).L
    l_thouless = log_potential - mean_log_a
    return ThoulessReport(
        L_transfer=l_transfer,
        L_thouless=l_thouless,
        gap=abs(l_transfer - l_thouless),
        clamped_terms=int(np.count_nonzero(clamped)),
    )


def thouless_check(fam: JacobiFamily, E: float, N: int, grid: TorusGrid) -> ThoulessReport:
    """Compare the finite-scale exponent with the Thouless reconstruction.

    L_thouless = mean_j log |E - E_j| - grid mean of log |a|, with E_j
    the eigenvalues of the window-N truncation at x = 0.  Terms with
    |E - E_j| < 1e-9 are clamped at log(1e-9) and counted.
    """
    return thouless_sweep(fam, [E], N, grid)[0]


def thouless_sweep(fam: JacobiFamily, energies, N: int, grid: TorusGrid) -> list[ThoulessReport]:
    """thouless_check over several energies, sharing the eigensolve.

    The truncation spectrum and the mean of log |a| do not depend on
    the probe energy, so a sweep costs one bisection plus one transfer
    sweep per energy.
    """
    if N < 100:
        raise ValueError("N must be >= 100")
    T = truncate(fam, np.zeros(fam.dimension), N)
    eigs = tridiag_eigenvalues(T)
    mla = _mean_log_a(fam, grid)
    return [_thouless_at_energy(fam, float(e), N, grid, eigs, mla) for e in energies]


@dataclass(frozen=True)
class IdsModulusReport:
    """Window masses k(E-h, E+h) with a log-log-log modulus fit."""

    points: tuple[tuple[float, float], ...]
    dropped: tuple[float, ...]
    gamma_fit: float | None
    residual: float | None


def ids_modulus_scan(fam: JacobiFamily, E_center: float, h_values, N: int) -> IdsModulusReport:
    """Scan shrinking symmetric windows around E_center.

    Fits ln(-ln k) against ln(-ln 2h) over the points with usable mass;
    windows with zero mass (below the 1/(2N+1) resolution floor) are
    dropped and reported.
    """
    hs = [float(h) for h in h_values]
    if not hs or any(h <= 0 for h in hs):
        raise ValueError("h values must be positive")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("h values must be strictly decreasing")
    points = []
    dropped = []
    for h in hs:
        rep = ids(fam, np.zeros(fam.dimension), E_center - h, E_center + h, N)
        if rep.k_value <= 0.0:
            dropped.append(h)
        else:
            points.append((h, rep.k_value))
    usable = [(h, k) for h, k in points if 2.0 * h < 1.0 and 0.0 < k < 1.0]
    gamma_fit = residual = None
    if len(usable) >= 2:
        xs = [math.log(-math.log(2.0 * h)) for h, _ in usable]
        ys = [math.log(-math.log(k)) for _, k in usable]
        try:
            gamma_fit, _, residual = linear_fit(xs, ys)
        except ValueError:
            gamma_fit = residual = None
    return IdsModulusReport(
        points=tuple(points), dropped=tuple(dropped), gamma_fit=gamma_fit, residual=residual
    )
