"""Finite-scale Lyapunov exponents and multi-scale diagnostics.

The workhorse is a rescaled transfer-product sweep: after every matrix
multiply the running product is divided by its max-abs entry and the
log of that factor is accumulated, so products of arbitrary length stay
inside double range.  The raw exponent is the grid mean of
(1/N) log ||A_N(x)||; the determinant-normalized exponent subtracts
half the mean of log |det A(x)|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .cocycle import AnalyticCocycle, operator_norms
from .errors import InfeasibleScheduleError, PreconditionError, SingularQuadratureError, ZeroProductError
from .reduction import linear_fit, pairwise_mean, pairwise_sum
from .torus import Frequency, TorusGrid, as_point, min_torus_norm, orbit_points

CLAMP_T = 700.0
DEFAULT_GRID_1D = 1024
DEFAULT_GRID_2D = 64
SCHEDULE_N_CEILING = 1e300


def default_grid(dimension: int) -> TorusGrid:
    if dimension == 1:
        return TorusGrid(DEFAULT_GRID_1D, 1)
    if dimension == 2:
        return TorusGrid(DEFAULT_GRID_2D, 2)
    raise ValueError("no default grid beyond dimension 2; pass one explicitly")


@dataclass(frozen=True)
class TransferProduct:
    """Rescaled product prod_{j=N-1..0} A(x + j w).

    exp(log_scale) * scaled recovers the exact product; the max-abs
    entry of `scaled` is 1 by construction.  log_abs_det is accumulated
    factor by factor during the sweep: reconstructing it from the final
    entries would lose the cancellation between near-parallel columns
    of a hyperbolic product.
    """

    scaled: np.ndarray
    log_scale: float
    steps: int
    log_abs_det: float = -math.inf

    @property
    def log_norm(self) -> float:
        a = self.scaled
        return self.log_scale + math.log(
            float(operator_norms(a[0, 0:1], a[0, 1:2], a[1, 0:1], a[1, 1:2])[0])
        )


class _SweepState(NamedTuple):
    p11: np.ndarray
    p12: np.ndarray
    p21: np.ndarray
    p22: np.ndarray
    log_scale: np.ndarray
    zero_step: np.ndarray
    log_det: np.ndarray


def _product_sweep(
    A: AnalyticCocycle,
    omega: Frequency,
    xs: np.ndarray,
    N: int,
    milestones: Sequence[int] = (),
    clamp: float = CLAMP_T,
    track_det: bool = False,
):
    """Run the rescaled product for N steps over a batch of start points.

    Returns the final state plus, per requested milestone n, the array
    of clamped log ||A_n(x_i)|| values and the clamp mask.
    """
    n_pts = xs.shape[0]
    p11 = np.ones(n_pts, dtype=np.complex128)
    p12 = np.zeros(n_pts, dtype=np.complex128)
    p21 = np.zeros(n_pts, dtype=np.complex128)
    p22 = np.ones(n_pts, dtype=np.complex128)
    log_scale = np.zeros(n_pts, dtype=np.float64)
    zero_step = np.full(n_pts, -1, dtype=np.int64)
    log_det = np.zeros(n_pts, dtype=np.float64)
    cur = np.array(xs, dtype=np.float64)
    w = omega.vec
    want = {int(m) for m in milestones}
    lognorm_rows: dict[int, np.ndarray] = {}
    clamp_rows: dict[int, np.ndarray] = {}

    for j in range(N):
        b11, b12, b21, b22 = A.evaluate_entries(cur)
        q11 = b11 * p11 + b12 * p21
        q12 = b11 * p12 + b12 * p22
        q21 = b21 * p11 + b22 * p21
        q22 = b21 * p12 + b22 * p22
        if track_det:
            with np.errstate(divide="ignore"):
                log_det = log_det + np.log(np.abs(b11 * b22 - b12 * b21))
        mag = np.maximum(
            np.maximum(np.abs(q11), np.abs(q12)), np.maximum(np.abs(q21), np.abs(q22))
        )
        newly_zero = (mag == 0.0) & (zero_step < 0)
        if np.any(newly_zero):
            zero_step[newly_zero] = j + 1
        # Subnormal rescale factors would trip complex division; any
        # positive divisor keeps exp(log_scale) * P exact, so floor it.
        safe = np.where(mag < 5e-308, np.where(mag == 0.0, 1.0, 5e-308), mag)
        p11 = q11 / safe
        p12 = q12 / safe
        p21 = q21 / safe
        p22 = q22 / safe
        log_scale = log_scale + np.log(safe)
        cur = cur + w
        cur -= np.floor(cur)
        step = j + 1
        if step in want:
            with np.errstate(divide="ignore", invalid="ignore"):
                norms = operator_norms(p11, p12, p21, p22)
                row = log_scale + np.log(norms)
            row = np.where(np.isfinite(row), row, -np.inf)
            clamped = row < -clamp
            lognorm_rows[step] = np.where(clamped, -clamp, row)
            clamp_rows[step] = clamped
    state = _SweepState(p11, p12, p21, p22, log_scale, zero_step, log_det)
    return state, lognorm_rows, clamp_rows


def transfer_product(A: AnalyticCocycle, omega: Frequency, x, N: int) -> TransferProduct:
    """Left-ordered rescaled product of N one-step matrices along the orbit."""
    if N < 1:
        raise ValueError("N must be >= 1")
    xs = as_point(x).vec.reshape(1, -1)
    state, _, _ = _product_sweep(A, omega, xs, N, track_det=True)
    if state.zero_step[0] >= 0:
        raise ZeroProductError(int(state.zero_step[0]))
    scaled = np.array(
        [[state.p11[0], state.p12[0]], [state.p21[0], state.p22[0]]], dtype=np.complex128
    )
    return TransferProduct(
        scaled=scaled,
        log_scale=float(state.log_scale[0]),
        steps=N,
        log_abs_det=float(state.log_det[0]),
    )


def finite_le_at_point(A: AnalyticCocycle, omega: Frequency, x, N: int, clamp: float = CLAMP_T) -> float:
    """(1/N) log ||A_N(x)||, clamped below at -clamp/N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    xs = as_point(x).vec.reshape(1, -1)
    _, rows, _ = _product_sweep(A, omega, xs, N, milestones=[N], clamp=clamp)
    return float(rows[N][0]) / N


@dataclass(frozen=True)
class LyapunovRecord:
    """Finite-scale exponents at one scale N on one quadrature grid.

    L = L_prime - log_det_half holds exactly as stored.  clamp_fraction
    is the share of grid nodes whose log-norm integrand was clamped; a
    fraction above 1% attaches a quality warning without failing.
    """

    N: int
    L_prime: float
    log_det_half: float
    L: float
    grid_M: int
    clamp_fraction: float
    clamp_threshold: float = CLAMP_T
    warning: str | None = None


def log_det_integral(A: AnalyticCocycle, grid: TorusGrid, clamp: float = CLAMP_T) -> float:
    """Half the grid mean of log |det A(x)|, clamped below at -clamp.

    Raises when more than 5% of nodes clamp; such a grid cannot resolve
    the determinant's zero set and needs refinement.
    """
    dets = np.abs(A.det_values(grid.points()))
    with np.errstate(divide="ignore"):
        vals = np.log(dets)
    clamped = vals < -clamp
    frac = float(np.count_nonzero(clamped)) / vals.size
    if frac > 0.05:
        raise SingularQuadratureError(
            f"{100 * frac:.1f}% of log-det nodes clamped; refine the grid"
        )
    vals = np.where(clamped, -clamp, vals)
    return 0.5 * pairwise_mean(vals)


def finite_le_profile(
    A: AnalyticCocycle,
    omega: Frequency,
    Ns: Sequence[int],
    grid: TorusGrid | None = None,
    clamp: float = CLAMP_T,
) -> list[LyapunovRecord]:
    """Records at several scales from one shared product sweep.

    All requested N are milestones of a single orbit sweep, so the cost
    is max(Ns) * nodes regardless of how many scales are recorded.
    """
    Ns = sorted({int(n) for n in Ns})
    if not Ns or Ns[0] < 1:
        raise ValueError("scales must be positive integers")
    if grid is None:
        grid = default_grid(A.dimension)
    xs = grid.points()
    _, rows, clamps = _product_sweep(A, omega, xs, Ns[-1], milestones=Ns, clamp=clamp)
    ldh = log_det_integral(A, grid, clamp=clamp)
    out = []
    for n in Ns:
        lp = pairwise_mean(rows[n]) / n
        cf = float(np.count_nonzero(clamps[n])) / xs.shape[0]
        warning = None
        if cf > 0.01:
            warning = f"clamp fraction {cf:.4f} above 1%; treat this record as contaminated"
        out.append(
            LyapunovRecord(
                N=n,
                L_prime=lp,
                log_det_half=ldh,
                L=lp - ldh,
                grid_M=grid.points_per_dim,
                clamp_fraction=cf,
                clamp_threshold=clamp,
                warning=warning,
            )
        )
    return out


def finite_le(
    A: AnalyticCocycle,
    omega: Frequency,
    N: int,
    grid: TorusGrid | None = None,
    clamp: float = CLAMP_T,
) -> LyapunovRecord:
    """Grid-averaged finite-scale exponents at a single scale."""
    return finite_le_profile(A, omega, [N], grid=grid, clamp=clamp)[0]


@dataclass(frozen=True)
class LDTReport:
    """Measured mass of the deviation set {x : |L_N(x) - mean| > eps}.

    `bound` is a fitted exponential decay exp(-C_fit * K0^c_fit) filled
    by sweep drivers once a regression over several K0 is available;
    the measurement itself never asserts any constant.
    """

    N: int
    epsilon: float
    K0: int | None
    measure: float
    bound: float | None = None


def ldt_empirical(
    A: AnalyticCocycle,
    omega: Frequency,
    N: int,
    epsilon: float,
    grid: TorusGrid | None = None,
    K0: int | None = None,
    clamp: float = CLAMP_T,
) -> LDTReport:
    """Fraction of grid nodes whose pointwise exponent strays by > epsilon.

    When K0 is supplied the scale condition N > K0 / delta0(K0) is
    checked against the frequency's small-divisor bound.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if grid is None:
        grid = default_grid(A.dimension)
    if K0 is not None:
        delta0, _ = min_torus_norm(omega, K0)
        if delta0 <= 0 or not N > K0 / delta0:
            raise PreconditionError(
                f"scale N = {N} does not exceed K0/delta0 = {K0}/{delta0}"
            )
    xs = grid.points()
    _, rows, _ = _product_sweep(A, omega, xs, N, milestones=[N], clamp=clamp)
    vals = rows[N] / N
    mean = pairwise_mean(vals)
    measure = float(np.count_nonzero(np.abs(vals - mean) > epsilon)) / xs.shape[0]
    return LDTReport(N=N, epsilon=epsilon, K0=K0, measure=measure)


def _window_lognorms(A: AnalyticCocycle, omega: Frequency, starts: np.ndarray, length: int) -> np.ndarray:
    """log ||A_length(s)|| for a batch of window start points."""
    _, rows, _ = _product_sweep(A, omega, starts, length, milestones=[length])
    return rows[length]


class ApResidual(NamedTuple):
    residual: float
    bound: float
    hypotheses_met: bool


AP_CONSTANT = 100.0


def ap_residual(A: AnalyticCocycle, omega: Frequency, x, N: int, N1: int) -> ApResidual:
    """Pointwise telescoping residual of the long-scale exponent.

    With n = N1/N and pointwise values L_n(y) = (1/n) log ||A_n(y)||,
    checks at the base point x, taking delta = L_N(x)/2:

      * positivity L_N(x) > delta with the scale condition N*delta > 2,
      * doubling stability |L_N(x) - L_2N(x)| < L_N(x)/100,
      * orbit stability max_{n=N,2N} |L_n(x) - L_n(x + jNw)| < delta/100
        for every 1 <= j <= N1/N.

    When all hold, returns the residual

      |L_N1(x) + (1/n) sum_j L_N(x+jNw) - (2/n) sum_j L_2N(x+jNw)|

    against the budget exp(-(N/4) L_N(x)) + C * L_N(x) * N/N1 with the
    stand-in absolute constant C = 100.
    """
    if N < 1 or N1 < N:
        raise ValueError("need 1 <= N <= N1")
    if N1 % N != 0:
        raise ValueError(f"N = {N} must divide N1 = {N1}")
    n_windows = N1 // N
    base = as_point(x).vec
    orbit = orbit_points(base, omega, N1 + 1)
    starts = orbit[:: N][: n_windows + 1]

    ln_n = _window_lognorms(A, omega, starts, N) / N
    ln_2n = _window_lognorms(A, omega, starts, 2 * N) / (2 * N)
    l_n1 = _window_lognorms(A, omega, base.reshape(1, -1), N1)[0] / N1

    l_n_x = float(ln_n[0])
    delta = l_n_x / 2.0
    hypotheses = (
        l_n_x > delta
        and N * delta > 2.0
        and abs(l_n_x - float(ln_2n[0])) < l_n_x / 100.0
        and float(np.max(np.abs(ln_n[1:] - l_n_x))) < delta / 100.0
        and float(np.max(np.abs(ln_2n[1:] - float(ln_2n[0])))) < delta / 100.0
    )
    mean_n = pairwise_sum(ln_n[:n_windows]) / n_windows
    mean_2n = pairwise_sum(ln_2n[:n_windows]) / n_windows
    residual = abs(l_n1 + mean_n - 2.0 * mean_2n)
    bound = math.exp(-(N / 4.0) * l_n_x) + AP_CONSTANT * l_n_x * N / N1
    return ApResidual(residual=residual, bound=bound, hypotheses_met=bool(hypotheses))


@dataclass(frozen=True)
class ConvergenceProbe:
    """Telescoped deviations |L_{2^j N0} + L_{N0} - 2 L_{2 N0}|."""

    points: tuple[tuple[int, float], ...]
    ceiling_hit: bool


def convergence_probe(
    A: AnalyticCocycle,
    omega: Frequency,
    N0: int,
    depth: int,
    grid: TorusGrid | None = None,
    work_ceiling: int = 1 << 26,
) -> ConvergenceProbe:
    """Dyadic-scale deviations on a fixed grid, from one shared sweep.

    Stops early (flagging the ceiling) once 2^j * N0 * nodes would
    exceed the work ceiling.  The deviations are invariant under
    rescaling A -> cA because the determinant mean cancels.
    """
    if N0 < 1 or depth < 0:
        raise ValueError("need N0 >= 1 and depth >= 0")
    if grid is None:
        grid = default_grid(A.dimension)
    nodes = grid.node_count
    ceiling_hit = False
    max_j = depth
    while max_j > 0 and (N0 << max_j) * nodes > work_ceiling:
        max_j -= 1
        ceiling_hit = True
    scales = [N0 << j for j in range(max_j + 1)]
    if 2 * N0 not in scales:
        scales.append(2 * N0)
    records = finite_le_profile(A, omega, scales, grid=grid)
    by_n = {r.N: r for r in records}
    l0 = by_n[N0].L_prime
    l1 = by_n[2 * N0].L_prime
    points = tuple(
        (N0 << j, abs(by_n[N0 << j].L_prime + l0 - 2.0 * l1)) for j in range(max_j + 1)
    )
    return ConvergenceProbe(points=points, ceiling_hit=ceiling_hit)


@dataclass(frozen=True)
class ScheduleStage:
    s: int
    kappa: float
    K: float
    delta: float
    N: int
    admissible: bool
    failed: tuple[str, ...] = ()


@dataclass(frozen=True)
class InductionSchedule:
    """Squaring induction schedule kappa_s = kappa_{s-1}^2.

    Stage data follow K_s = K_{s-1}^2 = kappa_s^{-C}, delta_s =
    tau * K_s^{-sigma}, and N_s the largest multiple of N_{s-1} not
    exceeding N_{s-1} * exp(K_{s-1}^c / 2).  The decay rate implied for
    dyadic telescoping is eta = c / (sigma + 2) with c = 1/C.
    """

    kappa0: float
    C: float
    c: float
    sigma: float
    tau: float
    rho: float
    eta: float
    stages: tuple[ScheduleStage, ...]
    truncated: bool = False


def _admissibility(stage_n: int, K: float, delta: float, tau: float, sigma: float) -> tuple[bool, tuple[str, ...]]:
    # N_s >= kappa_s^-C * delta_s^-1 * K_s, i.e. N_s >= K_s^(sigma+2)/tau.
    ln_bound = (sigma + 2.0) * math.log(K) - math.log(tau)
    ok = math.log(stage_n) >= ln_bound - 1e-12
    return (ok, ()) if ok else (False, ("N >= kappa^-C * delta^-1 * K",))


def build_schedule(
    kappa0: float,
    C: float,
    sigma: float,
    tau: float,
    rho: float = 1.0,
    max_stages: int = 8,
    toy: bool = False,
) -> InductionSchedule:
    """Evaluate the squaring schedule until a ceiling or max_stages.

    Strict mode enforces the regime kappa0 < 1/1000 and C >= 5 the
    convergence argument actually needs; toy mode accepts any
    kappa0 in (0,1) and C > 1 so the recurrence arithmetic itself can
    be exercised at desk scale, with admissibility failures flagged
    per stage instead of raised.
    """
    if not (0.0 < kappa0 < 1.0):
        raise ValueError("kappa0 must lie in (0, 1)")
    if max_stages < 1:
        raise ValueError("max_stages must be >= 1")
    if not tau > 0 or not sigma >= 1 or not rho > 0:
        raise ValueError("need tau > 0, sigma >= 1, rho > 0")
    if not toy:
        if not kappa0 < 1e-3:
            raise ValueError("kappa0 must be below 1/1000 (or pass toy=True)")
        if not C >= 5:
            raise ValueError("C must be >= 5 (or pass toy=True)")
    elif not C > 1:
        raise ValueError("C must exceed 1")

    c = 1.0 / C
    K0 = kappa0 ** (-C)
    ln_n0 = (sigma + 2.0) * math.log(K0) - math.log(tau)
    if ln_n0 / math.log(2.0) > 1020:
        raise InfeasibleScheduleError(
            "stage 0 fails 'N >= kappa^-C * delta^-1 * K': K0^(sigma+2)/tau exceeds the representable ceiling"
        )
    N0 = 1 << max(0, math.ceil(ln_n0 / math.log(2.0) - 1e-12))
    eta = c / (sigma + 2.0)

    stages: list[ScheduleStage] = []
    kappa, K, N = kappa0, K0, N0
    truncated = False
    for s in range(max_stages):
        delta = tau * K ** (-sigma)
        ok, failed = _admissibility(N, K, delta, tau, sigma)
        if s == 0 and not ok:
            raise InfeasibleScheduleError(f"stage 0 fails {failed[0]!r}")
        stages.append(ScheduleStage(s=s, kappa=kappa, K=K, delta=delta, N=N, admissible=ok, failed=failed))
        if s == max_stages - 1:
            break
        growth = 0.5 * K**c
        if growth > math.log(SCHEDULE_N_CEILING) or N * math.floor(math.exp(growth)) > SCHEDULE_N_CEILING:
            truncated = True
            break
        N = N * int(math.floor(math.exp(growth)))
        kappa = kappa * kappa
        K = K * K
    return InductionSchedule(
        kappa0=kappa0,
        C=C,
        c=c,
        sigma=sigma,
        tau=tau,
        rho=rho,
        eta=eta,
        stages=tuple(stages),
        truncated=truncated,
    )


def fit_ldt_bound(reports: Sequence[LDTReport]) -> tuple[float, float, list[LDTReport]] | None:
    """Regress ln(-ln measure) on ln K0 across a sweep of reports.

    Returns (C_fit, c_fit, reports-with-bounds) or None when fewer than
    two reports have a usable (K0, measure) pair.
    """
    usable = [r for r in reports if r.K0 and 0.0 < r.measure < 1.0]
    if len(usable) < 2:
        return None
    xs = [math.log(r.K0) for r in usable]
    ys = [math.log(-math.log(r.measure)) for r in usable]
    try:
        c_fit, ln_c, _ = linear_fit(xs, ys)
    except ValueError:
        return None
    C_fit = math.exp(ln_c)
    updated = [
        LDTReport(
            N=r.N,
            epsilon=r.epsilon,
            K0=r.K0,
            measure=r.measure,
            bound=math.exp(-C_fit * r.K0**c_fit) if r.K0 else None,
        )
        for r in reports
    ]
    return C_fit, c_fit, updated
