"""Analytic M(2,C) cocycles as finite Fourier series of 2x2 matrices.

A cocycle map A(x) = sum_k C_k exp(2 pi i k.x) is stored by its
coefficient table.  Finite trigonometric polynomials are entire, so
evaluation extends to complex arguments and strip norms are finite for
every strip parameter rho.  Scalar trigonometric polynomials (used for
Jacobi coefficients a, v and for determinants) share the same layout
with 1x1 blocks.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError, SingularPointError
from .reduction import linear_fit
from .torus import Frequency, TorusGrid, as_point

DET_FLOOR = 1e-300
_TWO_PI_I = 2j * np.pi


def _sorted_keys(coeffs: dict) -> list[tuple[int, ...]]:
    return sorted(coeffs.keys())


def _degree_of(coeffs: dict) -> int:
    deg = 0
    for k in coeffs:
        deg = max(deg, max(abs(c) for c in k))
    return deg


def _phase_table(ks: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """exp(2 pi i k.z) for every point/row pair, accumulated per axis.

    The dot product over the torus dimension is an explicit loop so the
    result never depends on a threaded BLAS reduction.
    """
    n = zs.shape[0]
    t = np.zeros(n, dtype=zs.dtype)[:, None] * np.zeros(ks.shape[0])[None, :]
    for axis in range(ks.shape[1]):
        t = t + zs[:, axis, None] * ks[None, :, axis]
    return np.exp(_TWO_PI_I * t)


@dataclass(frozen=True)
class TrigPoly:
    """Scalar trigonometric polynomial sum_k c_k exp(2 pi i k.x)."""

    dimension: int
    rho: float
    coeffs: dict[tuple[int, ...], complex]

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        clean = {}
        for k, c in self.coeffs.items():
            kk = tuple(int(v) for v in k)
            if len(kk) != self.dimension:
                raise ValueError(f"coefficient index {kk} has wrong dimension")
            clean[kk] = complex(c)
        object.__setattr__(self, "coeffs", clean)

    @property
    def degree(self) -> int:
        return _degree_of(self.coeffs)

    def _packed(self) -> tuple[np.ndarray, np.ndarray]:
        keys = _sorted_keys(self.coeffs)
        if not keys:
            keys = [(0,) * self.dimension]
        ks = np.asarray(keys, dtype=np.float64)
        cs = np.asarray([self.coeffs.get(k, 0.0) for k in keys], dtype=np.complex128)
        return ks, cs

    def evaluate_many(self, zs) -> np.ndarray:
        zs = np.asarray(zs)
        if zs.ndim == 1:
            zs = zs[:, None]
        ks, cs = self._packed()
        ph = _phase_table(ks, zs.astype(np.complex128 if np.iscomplexobj(zs) else np.float64))
        out = np.zeros(zs.shape[0], dtype=np.complex128)
        for i in range(cs.size):
            out = out + cs[i] * ph[:, i]
        return out

    def evaluate(self, z) -> complex:
        zs = np.asarray(z, dtype=np.complex128 if np.iscomplexobj(np.asarray(z)) else np.float64)
        return complex(self.evaluate_many(zs.reshape(1, -1))[0])

    def conjugate(self) -> "TrigPoly":
        """Series whose restriction to real x is the complex conjugate."""
        return TrigPoly(
            self.dimension,
            self.rho,
            {tuple(-c for c in k): v.conjugate() for k, v in self.coeffs.items()},
        )

    def shifted(self, omega: Frequency, steps: int = 1) -> "TrigPoly":
        """The composition x -> poly(x + steps * omega), as a series."""
        w = omega.vec
        return TrigPoly(
            self.dimension,
            self.rho,
            {
                k: v * cmath.exp(_TWO_PI_I * steps * float(np.dot(k, w)))
                for k, v in self.coeffs.items()
            },
        )

    def is_real_on_torus(self, tol: float = 1e-12) -> bool:
        scale = max((abs(v) for v in self.coeffs.values()), default=1.0)
        for k, v in self.coeffs.items():
            mirror = self.coeffs.get(tuple(-c for c in k), 0.0)
            if abs(v - mirror.conjugate()) > tol * max(scale, 1.0):
                return False
        return True

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in self.coeffs.values())

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        merged = dict(self.coeffs)
        for k, v in other.coeffs.items():
            merged[k] = merged.get(k, 0.0) + v
        return TrigPoly(self.dimension, min(self.rho, other.rho), merged)

    def __mul__(self, scalar) -> "TrigPoly":
        return TrigPoly(self.dimension, self.rho, {k: v * scalar for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "TrigPoly":
        return self * (-1.0)

    @staticmethod
    def constant(value, dimension: int = 1, rho: float = 0.1) -> "TrigPoly":
        return TrigPoly(dimension, rho, {(0,) * dimension: complex(value)})

    @staticmethod
    def cosine(amplitude: float, harmonic=None, dimension: int = 1, rho: float = 0.1) -> "TrigPoly":
        """amplitude * cos(2 pi k.x) for the given harmonic (default e1)."""
        if harmonic is None:
            harmonic = (1,) + (0,) * (dimension - 1)
        k = tuple(int(v) for v in harmonic)
        mk = tuple(-v for v in k)
        half = complex(amplitude) / 2.0
        coeffs = {k: half}
        coeffs[mk] = coeffs.get(mk, 0.0) + half
        return TrigPoly(dimension, rho, coeffs)


@dataclass(frozen=True)
class AnalyticCocycle:
    """Finite Fourier series of 2x2 complex matrices with strip width rho.

    Construction certifies that det A(x) is not identically zero by
    sampling det on a lattice with 4*(2*degree+1) nodes per dimension.
    For trigonometric polynomials of that degree an identically-zero
    sample set forces identical vanishing, so a nonzero sample is a
    certificate and an all-zero sample set is a rejection.
    """

    dimension: int
    rho: float
    coeffs: dict[tuple[int, ...], np.ndarray]
    _packed_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        clean = {}
        for k, mat in self.coeffs.items():
            kk = tuple(int(v) for v in k)
            if len(kk) != self.dimension:
                raise ValueError(f"coefficient index {kk} has wrong dimension")
            arr = np.asarray(mat, dtype=np.complex128)
            if arr.shape != (2, 2):
                raise ValueError("coefficients must be 2x2 blocks")
            clean[kk] = arr
        object.__setattr__(self, "coeffs", clean)
        self._certify_not_identically_singular()

    @property
    def degree(self) -> int:
        return _degree_of(self.coeffs)

    def _packed(self):
        cache = self._packed_cache
        if "ks" not in cache:
            keys = _sorted_keys(self.coeffs)
            if not keys:
                keys = [(0,) * self.dimension]
            cache["ks"] = np.asarray(keys, dtype=np.float64)
            flat = np.asarray(
                [self.coeffs.get(k, np.zeros((2, 2))) for k in keys], dtype=np.complex128
            )
            cache["blocks"] = flat.reshape(len(keys), 4).T.copy()
        return cache["ks"], cache["blocks"]

    def evaluate_entries(self, zs) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Entries (a11, a12, a21, a22) of A at a batch of points."""
        zs = np.asarray(zs)
        if zs.ndim == 1:
            zs = zs[:, None]
        ks, blocks = self._packed()
        ph = _phase_table(ks, zs.astype(np.complex128 if np.iscomplexobj(zs) else np.float64))
        n = zs.shape[0]
        out = [np.zeros(n, dtype=np.complex128) for _ in range(4)]
        for i in range(ks.shape[0]):
            col = ph[:, i]
            for r in range(4):
                out[r] = out[r] + blocks[r, i] * col
        return out[0], out[1], out[2], out[3]

    def evaluate(self, z) -> np.ndarray:
        """The 2x2 matrix A(z); z may be real (torus) or complex."""
        arr = np.asarray(z)
        zs = arr.reshape(1, -1)
        a, b, c, d = self.evaluate_entries(zs)
        return np.array([[a[0], b[0]], [c[0], d[0]]], dtype=np.complex128)

    def det_values(self, zs) -> np.ndarray:
        a, b, c, d = self.evaluate_entries(zs)
        return a * d - b * c

    def _certify_not_identically_singular(self):
        # Determinants below 1e-13 of the coefficient scale squared are
        # treated as identically singular at working precision.
        m = 4 * (2 * self.degree + 1)
        grid = TorusGrid(m, self.dimension)
        dets = np.abs(self.det_values(grid.points()))
        scale = float(max((np.abs(v).max() for v in self.coeffs.values()), default=0.0)) ** 2
        if scale == 0.0 or not np.any(dets > 1e-13 * scale):
            raise SingularPointError("determinant vanishes identically on the certification grid")

    def shifted(self, omega: Frequency, steps: int = 1) -> "AnalyticCocycle":
        w = omega.vec
        return AnalyticCocycle(
            self.dimension,
            self.rho,
            {
                k: v * cmath.exp(_TWO_PI_I * steps * float(np.dot(k, w)))
                for k, v in self.coeffs.items()
            },
        )

    def __add__(self, other: "AnalyticCocycle") -> "AnalyticCocycle":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        merged = {k: v.copy() for k, v in self.coeffs.items()}
        for k, v in other.coeffs.items():
            merged[k] = merged.get(k, np.zeros((2, 2), dtype=np.complex128)) + v
        return AnalyticCocycle(self.dimension, min(self.rho, other.rho), merged)

    def __mul__(self, scalar) -> "AnalyticCocycle":
        return AnalyticCocycle(
            self.dimension, self.rho, {k: v * scalar for k, v in self.coeffs.items()}
        )

    __rmul__ = __mul__


def operator_norm(mat) -> float:
    """Largest singular value of a 2x2 matrix, by the closed form
    sigma_max^2 = (f + sqrt(f^2 - 4 |det|^2)) / 2 with f the squared
    Frobenius norm.

    Evaluated in the factored form (sqrt(f + 2|det|) + sqrt(f - 2|det|))/2
    with f -+ 2|det| rewritten as sums of squares: the direct discriminant
    loses half the working digits whenever the singular values coalesce
    (isometries), which the norm-of-product sweeps cannot afford.
    """
    m = np.asarray(mat, dtype=np.complex128).reshape(2, 2)
    flat = m.reshape(4, 1)
    return float(operator_norms(flat[0], flat[1], flat[2], flat[3])[0])


def operator_norms(a11, a12, a21, a22) -> np.ndarray:
    """Vectorized largest singular value from entry arrays.

    With unit phase u = det/|det| (u = 1 for singular matrices),
    f -+ 2|det| equals |a11 -+ conj(a22) u|^2 + |a12 +- conj(a21) u|^2
    exactly, so both square roots act on cancellation-free quantities.
    """
    det = a11 * a22 - a12 * a21
    absdet = np.abs(det)
    # Componentwise real divisions: complex division would overflow
    # internally for subnormal |det|.
    safe = np.where(absdet > 0.0, absdet, 1.0)
    phase = np.where(absdet > 0.0, det.real / safe + 1j * (det.imag / safe), 1.0 + 0.0j)
    co22 = np.conj(a22) * phase
    co21 = np.conj(a21) * phase
    s_minus = np.abs(a11 - co22) ** 2 + np.abs(a12 + co21) ** 2
    s_plus = np.abs(a11 + co22) ** 2 + np.abs(a12 - co21) ** 2
    return 0.5 * (np.sqrt(s_plus) + np.sqrt(s_minus))


def renormalize(A: AnalyticCocycle, x) -> np.ndarray:
    """A(x) / |det A(x)|^(1/2); unit-modulus determinant, norm >= 1."""
    m = A.evaluate(as_point(x).vec)
    absdet = abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    if absdet < DET_FLOOR:
        raise SingularPointError(f"|det A(x)| = {absdet} below floor {DET_FLOOR}")
    return m / np.sqrt(absdet)


def strip_norm(A: AnalyticCocycle, M: int) -> float:
    """Grid approximation of the strip norm sup over |Im z_j| <= rho/2.

    By the maximum principle the sup over the closed polystrip is
    attained on the distinguished boundary Im z_j = +-rho/2, so only the
    2^d sign patterns are scanned.  The result is a lower bound of the
    true sup and converges to it as M grows.
    """
    floor = 4 * A.degree + 4
    if M < floor:
        raise ResolutionError(f"strip norm grid M = {M} below resolution floor {floor}")
    grid = TorusGrid(M, A.dimension).points()
    best = 0.0
    half = 0.5 * A.rho
    for pattern in np.ndindex(*(2,) * A.dimension):
        signs = np.asarray([1.0 if s == 0 else -1.0 for s in pattern])
        zs = grid + 1j * half * signs[None, :]
        norms = operator_norms(*A.evaluate_entries(zs))
        best = max(best, float(norms.max()))
    return best


def det_sublevel_measure(A: AnalyticCocycle, t: float, grid: TorusGrid) -> float:
    """Fraction of grid nodes where |det A(x)| < t."""
    if not t > 0:
        raise ValueError("t must be positive")
    dets = np.abs(A.det_values(grid.points()))
    return float(np.count_nonzero(dets < t)) / dets.size


@dataclass(frozen=True)
class LojasiewiczFit:
    """Power-law envelope measure{|det A| < t} <= S * t^b.

    When the determinant never dips below the sampled thresholds the
    fit degenerates; that is reported as no_zeros=True with b = inf.
    """

    S: float
    b: float
    t_range: tuple[float, float]
    residual: float
    no_zeros: bool = False


def fit_lojasiewicz(A: AnalyticCocycle, grid: TorusGrid, t_values) -> LojasiewiczFit:
    """Log-log least squares of sublevel measure against threshold.

    S is inflated after the fit so the envelope bound holds at every
    sampled threshold with nonzero measure.
    """
    ts = np.asarray(sorted(float(t) for t in t_values), dtype=np.float64)
    if ts.size < 8:
        raise ValueError("need at least 8 thresholds")
    if not np.all(ts > 0):
        raise ValueError("thresholds must be positive")
    dets = np.sort(np.abs(A.det_values(grid.points())))
    n = dets.size
    measures = np.searchsorted(dets, ts, side="left") / n
    mask = measures > 0
    if not np.any(mask):
        return LojasiewiczFit(
            S=0.0, b=np.inf, t_range=(float(ts[0]), float(ts[-1])), residual=0.0, no_zeros=True
        )
    lt = np.log(ts[mask])
    lm = np.log(measures[mask])
    if lt.size == 1 or np.all(lt == lt[0]):
        b = 1.0
        s_fit = measures[mask][0] / ts[mask][0]
        residual = 0.0
    else:
        b, intercept, residual = linear_fit(lt, lm)
        s_fit = float(np.exp(intercept))
    b = max(b, 1e-12)
    envelope = float(np.max(measures[mask] / ts[mask] ** b))
    S = max(s_fit, envelope) * (1.0 + 1e-12)
    return LojasiewiczFit(S=S, b=float(b), t_range=(float(ts[0]), float(ts[-1])), residual=residual)


def jacobi_cocycle(a: TrigPoly, v: TrigPoly, E: float, omega: Frequency, rho: float | None = None) -> AnalyticCocycle:
    """One-step transfer cocycle of the Jacobi family (a, v) at energy E.

    A(x) = [[E - v(x + w), -conj_series(a)(x)], [a(x + w), 0]], so that
    iterating A along the orbit of w multiplies the one-step matrices in
    decreasing index order.  det A(x) = conj_series(a)(x) * a(x + w).
    """
    if a.dimension != v.dimension or a.dimension != omega.dimension:
        raise ValueError("dimension mismatch among a, v, omega")
    if a.is_zero(tol=0.0):
        raise SingularPointError("off-diagonal coefficient a is identically zero")
    if not v.is_real_on_torus():
        raise ValueError("diagonal coefficient v must be real on the torus")
    d = a.dimension
    if rho is None:
        rho = min(a.rho, v.rho)
    top_left = TrigPoly.constant(E, d, rho) + (-1.0) * v.shifted(omega)
    top_right = (-1.0) * a.conjugate()
    bottom_left = a.shifted(omega)
    keys = set(top_left.coeffs) | set(top_right.coeffs) | set(bottom_left.coeffs)
    coeffs = {}
    for k in keys:
        coeffs[k] = np.array(
            [
                [top_left.coeffs.get(k, 0.0), top_right.coeffs.get(k, 0.0)],
                [bottom_left.coeffs.get(k, 0.0), 0.0],
            ],
            dtype=np.complex128,
        )
    return AnalyticCocycle(d, rho, coeffs)


def schrodinger_cocycle(v: TrigPoly, E: float, omega: Frequency, rho: float | None = None) -> AnalyticCocycle:
    """Jacobi cocycle with a = 1; the determinant is identically one."""
    one = TrigPoly.constant(1.0, v.dimension, v.rho)
    return jacobi_cocycle(one, v, E, omega, rho=rho)


def amo_cocycle(lam: float, E: float, omega: Frequency, rho: float = 0.1) -> AnalyticCocycle:
    """Almost Mathieu transfer cocycle: v(x) = 2 lam cos(2 pi x), a = 1."""
    v = TrigPoly.cosine(2.0 * lam, dimension=omega.dimension, rho=rho)
    return schrodinger_cocycle(v, E, omega, rho=rho)


def constant_cocycle(mat, dimension: int = 1, rho: float = 0.1) -> AnalyticCocycle:
    """Degree-0 cocycle equal to a fixed matrix everywhere."""
    return AnalyticCocycle(dimension, rho, {(0,) * dimension: np.asarray(mat, dtype=np.complex128)})


def trigpoly_to_json(p: TrigPoly) -> dict:
    return {
        "dimension": p.dimension,
        "degree": p.degree,
        "rho": p.rho,
        "coeffs": [
            {"k": list(k), "re": [[v.real]], "im": [[v.imag]]}
            for k, v in sorted(p.coeffs.items())
        ],
    }


def cocycle_to_json(A: AnalyticCocycle) -> dict:
    return {
        "dimension": A.dimension,
        "degree": A.degree,
        "rho": A.rho,
        "coeffs": [
            {"k": list(k), "re": np.real(v).tolist(), "im": np.imag(v).tolist()}
            for k, v in sorted(A.coeffs.items())
        ],
    }


def _blocks_from_json(obj: dict):
    for entry in obj["coeffs"]:
        k = tuple(int(c) for c in entry["k"])
        re = np.asarray(entry["re"], dtype=np.float64)
        im = np.asarray(entry["im"], dtype=np.float64)
        if re.shape != im.shape:
            raise ValueError("re/im blocks must share a shape")
        yield k, re + 1j * im


def trigpoly_from_json(obj: dict) -> TrigPoly:
    coeffs = {}
    for k, block in _blocks_from_json(obj):
        if block.shape != (1, 1):
            raise ValueError("scalar series must use 1x1 blocks")
        coeffs[k] = complex(block[0, 0])
    return TrigPoly(int(obj["dimension"]), float(obj["rho"]), coeffs)


def cocycle_from_json(obj: dict) -> AnalyticCocycle:
    coeffs = {}
    for k, block in _blocks_from_json(obj):
        if block.shape != (2, 2):
            raise ValueError("cocycle series must use 2x2 blocks")
        coeffs[k] = block
    return AnalyticCocycle(int(obj["dimension"]), float(obj["rho"]), coeffs)
