"""Configuration-driven experiment runner.

Each experiment reads a JSON config, runs the corresponding library
operations, and writes a CSV (LF line endings, '.' decimal, floats at
17 significant digits) plus a JSON manifest sidecar carrying the config
hash, library version, seed, and wall time.  Every CSV row carries the
provenance columns N, M, clamp_fraction.  Identical config and seed
reproduce the CSV byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cocycle import (
    AnalyticCocycle,
    TrigPoly,
    amo_cocycle,
    cocycle_from_json,
    constant_cocycle,
    jacobi_cocycle,
    schrodinger_cocycle,
    strip_norm,
    trigpoly_from_json,
)
from .errors import PreconditionError
from .jacobi import JacobiFamily, ids, ids_modulus_scan, thouless_sweep
from .lyapunov import (
    build_schedule,
    convergence_probe,
    finite_le,
    finite_le_profile,
    fit_ldt_bound,
    ap_residual,
    ldt_empirical,
)
from .reduction import linear_fit
from .torus import Frequency, TorusGrid, check_diophantine, min_torus_norm

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0
EXPERIMENT_KINDS = (
    "le",
    "ldt",
    "continuity-cocycle",
    "continuity-frequency",
    "ids",
    "thouless",
    "schedule",
    "ap-check",
)
POSITIVITY_FLOOR = 0.1
MAX_SCALE = 1 << 16
MAX_GRID_NODES = 1 << 22


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(out_dir: Path, kind: str, cfg: dict, seed, wall_time: float, csv_files: list[str]) -> Path:
    manifest = {
        "kind": kind,
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "library_version": __version__,
        "seed": seed,
        "wall_time_s": wall_time,
        "csv_files": csv_files,
    }
    path = out_dir / f"{kind}_manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def parse_frequency(spec: dict) -> Frequency:
    omega = spec.get("omega", "golden")
    if omega == "golden":
        omega = [GOLDEN_MEAN]
    return Frequency(tuple(float(w) for w in omega), tau=float(spec.get("tau", 1.0)), sigma=float(spec.get("sigma", 1.0)))


def parse_scalar_poly(spec, dimension: int = 1, rho: float = 0.1) -> TrigPoly:
    if spec == "one":
        return TrigPoly.constant(1.0, dimension, rho)
    if spec == "zero":
        return TrigPoly(dimension, rho, {})
    if "constant" in spec:
        return TrigPoly.constant(spec["constant"], dimension, rho)
    if "cos" in spec:
        body = spec["cos"]
        return TrigPoly.cosine(
            float(body["amplitude"]), harmonic=body.get("harmonic"), dimension=dimension, rho=rho
        )
    return trigpoly_from_json(spec)


def parse_cocycle(spec: dict, omega: Frequency) -> AnalyticCocycle:
    if "amo" in spec:
        body = spec["amo"]
        return amo_cocycle(float(body["lambda"]), float(body["energy"]), omega, rho=float(body.get("rho", 0.1)))
    if "constant" in spec:
        return constant_cocycle(np.asarray(spec["constant"], dtype=np.complex128), omega.dimension)
    if "schrodinger" in spec:
        body = spec["schrodinger"]
        v = parse_scalar_poly(body["v"], omega.dimension, float(body.get("rho", 0.1)))
        return schrodinger_cocycle(v, float(body["energy"]), omega)
    if "jacobi" in spec:
        body = spec["jacobi"]
        rho = float(body.get("rho", 0.1))
        a = parse_scalar_poly(body["a"], omega.dimension, rho)
        v = parse_scalar_poly(body["v"], omega.dimension, rho)
        return jacobi_cocycle(a, v, float(body["energy"]), omega)
    if "coeffs" in spec:
        return cocycle_from_json(spec)
    raise ValueError("unrecognized cocycle spec")


def parse_jacobi_family(spec: dict, omega: Frequency) -> JacobiFamily:
    rho = float(spec.get("rho", 0.1))
    a = parse_scalar_poly(spec.get("a", "one"), omega.dimension, rho)
    v = parse_scalar_poly(spec.get("v", "zero"), omega.dimension, rho)
    return JacobiFamily(a=a, v=v, omega=omega)


def _grid(cfg: dict, dimension: int) -> TorusGrid:
    m = int(cfg.get("grid_M", 1024 if dimension == 1 else 64))
    grid = TorusGrid(m, dimension)
    if grid.node_count > MAX_GRID_NODES:
        from .errors import BudgetError

        raise BudgetError(f"grid of {grid.node_count} nodes exceeds budget {MAX_GRID_NODES}")
    return grid


def _check_scales(ns) -> list[int]:
    out = []
    for n in ns:
        n = int(n)
        if n < 1 or n > MAX_SCALE:
            from .errors import BudgetError

            raise BudgetError(f"scale N = {n} outside budget [1, {MAX_SCALE}]")
        out.append(n)
    return out


@dataclass(frozen=True)
class ContinuityFit:
    """Deviation sweep with a weak-Hoelder modulus fit.

    gamma_fit is the slope of ln(-ln dev) against ln(-ln eps); it is
    reported only when at least four sweep points survive filtering.
    """

    epsilons: tuple[float, ...]
    deviations: tuple[float, ...]
    gamma_fit: float | None
    intercept: float | None
    residual: float | None
    beta: float


def _fit_weak_hoelder(epsilons, deviations, beta: float) -> ContinuityFit:
    usable = [
        (e, d)
        for e, d in zip(epsilons, deviations)
        if 0.0 < e < 1.0 and 0.0 < d < 1.0
    ]
    gamma = intercept = residual = None
    if len(usable) >= 4:
        xs = [math.log(-math.log(e)) for e, _ in usable]
        ys = [math.log(-math.log(d)) for _, d in usable]
        try:
            gamma, intercept, residual = linear_fit(xs, ys)
        except ValueError:
            gamma = intercept = residual = None
    return ContinuityFit(
        epsilons=tuple(epsilons),
        deviations=tuple(deviations),
        gamma_fit=gamma,
        intercept=intercept,
        residual=residual,
        beta=beta,
    )


def _pow2_at_most(x: float) -> int:
    return 1 << max(0, int(math.floor(math.log2(x)))) if x >= 1.0 else 1


def _pow2_at_least(x: float) -> int:
    return 1 << max(0, int(math.ceil(math.log2(x)))) if x >= 1.0 else 1


def _random_direction(dimension: int, degree: int, seed: int, rho: float) -> AnalyticCocycle:
    """Seeded random trig-polynomial perturbation, strip norm one."""
    rng = np.random.default_rng(seed)
    coeffs = {}
    for k in np.ndindex(*(2 * degree + 1,) * dimension):
        key = tuple(int(c) - degree for c in k)
        block = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        coeffs[key] = block / math.sqrt(2.0)
    p = AnalyticCocycle(dimension, rho, coeffs)
    norm_grid = max(64, 4 * degree + 4)
    return p * (1.0 / strip_norm(p, norm_grid))


def run_continuity_cocycle(cfg: dict, out_dir: Path, seed: int | None = None) -> ContinuityFit:
    """Deviation of the finite-scale exponent under cocycle perturbation.

    B = A + eps * P with a fixed seeded direction P; both exponents are
    taken at the eps-dependent working scale N(eps) = ceil((-ln eps)^beta)
    rounded up to a power of two and capped by the configured budget.
    Refuses when the base exponent at the largest budgeted scale is not
    safely positive.
    """
    omega = parse_frequency(cfg["frequency"])
    A = parse_cocycle(cfg["cocycle"], omega)
    grid = _grid(cfg, A.dimension)
    beta = float(cfg.get("beta", 0.5))
    epsilons = [float(e) for e in cfg["epsilons"]]
    n_max = _check_scales([cfg.get("N_max", 256)])[0]
    pert = cfg.get("perturbation", {})
    the_seed = seed if seed is not None else pert.get("seed")
    if the_seed is None:
        raise ValueError("a seed is mandatory for randomized perturbations")
    degree = int(pert.get("degree", 1))

    base = finite_le(A, omega, n_max, grid)
    if not base.L > POSITIVITY_FLOOR:
        raise PreconditionError(
            f"base exponent L = {base.L:.6f} at N = {n_max} does not exceed {POSITIVITY_FLOOR}"
        )
    direction = _random_direction(A.dimension, degree, int(the_seed), A.rho)

    rows = []
    deviations = []
    probes: dict[int, float] = {}
    for eps in epsilons:
        if eps > 0.0:
            n_work = min(_pow2_at_least(math.ceil((-math.log(eps)) ** beta)), n_max)
        else:
            n_work = 1
        rec_a = finite_le(A, omega, n_work, grid)
        if eps > 0.0:
            B = A + eps * direction
            rec_b = finite_le(B, omega, n_work, grid)
            dev = abs(rec_a.L - rec_b.L)
        else:
            rec_b = rec_a
            dev = 0.0
        if n_work not in probes:
            probe = convergence_probe(A, omega, n_work, 2, grid)
            probes[n_work] = probe.points[-1][1]
        deviations.append(dev)
        rows.append(
            [
                eps,
                n_work,
                grid.points_per_dim,
                max(rec_a.clamp_fraction, rec_b.clamp_fraction),
                rec_a.L,
                rec_b.L,
                dev,
                probes[n_work],
            ]
        )
    fit = _fit_weak_hoelder(epsilons, deviations, beta)
    header = [
        "epsilon",
        "N",
        "M",
        "clamp_fraction",
        "L_base",
        "L_perturbed",
        "deviation",
        "probe_delta",
        "gamma_fit",
        "intercept",
        "residual",
        "beta",
    ]
    for row in rows:
        row.extend([fit.gamma_fit, fit.intercept, fit.residual, beta])
    write_csv(out_dir / "continuity-cocycle.csv", header, rows)
    return fit


def run_continuity_frequency(cfg: dict, out_dir: Path, seed: int | None = None) -> ContinuityFit:
    """Deviation of the finite-scale exponent under frequency shifts.

    omega' = omega + h * u for a fixed unit direction u; the working
    scale is the largest power of two with h < exp(-N^(1/beta)).  The
    base omega must pass the Diophantine check up to the configured K;
    omega' carries no arithmetic assumption at all.
    """
    omega = parse_frequency(cfg["frequency"])
    A = parse_cocycle(cfg["cocycle"], omega)
    grid = _grid(cfg, A.dimension)
    beta = float(cfg.get("beta", 0.5))
    hs = [float(h) for h in cfg["h_values"]]
    n_max = _check_scales([cfg.get("N_max", 256)])[0]
    k_check = int(cfg.get("K_check", 50))
    direction = np.asarray(cfg.get("direction", [1.0] + [0.0] * (A.dimension - 1)), dtype=np.float64)

    holds, violator = check_diophantine(omega, k_check)
    if not holds:
        raise PreconditionError(
            f"omega fails the Diophantine bound up to K = {k_check} at k = {violator}"
        )
    base = finite_le(A, omega, n_max, grid)
    if not base.L > POSITIVITY_FLOOR:
        raise PreconditionError(
            f"base exponent L = {base.L:.6f} at N = {n_max} does not exceed {POSITIVITY_FLOOR}"
        )

    rows = []
    deviations = []
    for h in hs:
        if h > 0.0:
            n_work = min(_pow2_at_most((-math.log(h)) ** beta if h < 1.0 else 1.0), n_max)
        else:
            n_work = 1
        omega_p = Frequency(tuple((omega.vec + h * direction) % 1.0), tau=omega.tau, sigma=omega.sigma)
        rec_a = finite_le(A, omega, n_work, grid)
        rec_b = finite_le(A, omega_p, n_work, grid)
        dev = abs(rec_a.L - rec_b.L)
        deviations.append(dev)
        rows.append(
            [
                h,
                *omega_p.omega,
                n_work,
                grid.points_per_dim,
                max(rec_a.clamp_fraction, rec_b.clamp_fraction),
                rec_a.L,
                rec_b.L,
                dev,
            ]
        )
    fit = _fit_weak_hoelder(hs, deviations, beta)
    header = (
        ["h"]
        + [f"omega_prime_{i}" for i in range(A.dimension)]
        + ["N", "M", "clamp_fraction", "L_base", "L_shifted", "deviation", "gamma_fit", "intercept", "residual", "beta"]
    )
    for row in rows:
        row.extend([fit.gamma_fit, fit.intercept, fit.residual, beta])
    write_csv(out_dir / "continuity-frequency.csv", header, rows)
    return fit


def run_le(cfg: dict, out_dir: Path, seed=None) -> list:
    omega = parse_frequency(cfg["frequency"])
    A = parse_cocycle(cfg["cocycle"], omega)
    grid = _grid(cfg, A.dimension)
    scales = _check_scales(cfg["N_values"])
    records = finite_le_profile(A, omega, scales, grid)
    header = ["N", "M", "clamp_fraction", "L_prime", "log_det_half", "L", "warning"]
    rows = [
        [r.N, r.grid_M, r.clamp_fraction, r.L_prime, r.log_det_half, r.L, r.warning or ""]
        for r in records
    ]
    write_csv(out_dir / "le.csv", header, rows)
    return records


def _largest_admissible_k0(omega: Frequency, N: int, k_cap: int = 64) -> tuple[int, float]:
    """Largest K with N > K / delta0(K), by an incremental scan."""
    best = (1, min_torus_norm(omega, 1)[0])
    for k in range(1, k_cap + 1):
        delta0, _ = min_torus_norm(omega, k)
        if delta0 > 0 and N > k / delta0:
            best = (k, delta0)
    return best


def run_ldt(cfg: dict, out_dir: Path, seed=None) -> list:
    """Deviation-set masses over a sweep of scales, with a decay fit."""
    omega = parse_frequency(cfg["frequency"])
    A = parse_cocycle(cfg["cocycle"], omega)
    grid = _grid(cfg, A.dimension)
    epsilon = float(cfg.get("epsilon", 0.1))
    scales = _check_scales(cfg["N_values"])
    reports = []
    deltas = {}
    for n in scales:
        k0, delta0 = _largest_admissible_k0(omega, n)
        deltas[n] = delta0
        reports.append(ldt_empirical(A, omega, n, epsilon, grid, K0=k0))
    fitted = fit_ldt_bound(reports)
    c_fit = big_c_fit = None
    if fitted is not None:
        big_c_fit, c_fit, reports = fitted
    header = ["N", "M", "clamp_fraction", "K0", "delta0", "epsilon", "measure", "bound", "C_fit", "c_fit"]
    rows = [
        [r.N, grid.points_per_dim, 0.0, r.K0, deltas[r.N], r.epsilon, r.measure, r.bound, big_c_fit, c_fit]
        for r in reports
    ]
    write_csv(out_dir / "ldt.csv", header, rows)
    return reports


def run_ids(cfg: dict, out_dir: Path, seed=None):
    omega = parse_frequency(cfg["frequency"])
    fam = parse_jacobi_family(cfg["jacobi"], omega)
    n = _check_scales([cfg.get("N", 1000)])[0]
    x = tuple(float(c) for c in cfg.get("x", [0.0] * fam.dimension))
    x_average = int(cfg.get("x_average", 1))
    reports = []
    rows = []
    for e1, e2 in cfg.get("windows", []):
        rep = ids(fam, x, float(e1), float(e2), n, x_average=x_average)
        half = ids(fam, x, float(e1), float(e2), max(1, n // 2), x_average=x_average)
        reports.append(rep)
        rows.append(
            [rep.N, 2 * rep.N + 1, 0.0, rep.E1, rep.E2, rep.count, rep.k_value, abs(rep.k_value - half.k_value)]
            + list(rep.x)
        )
    header = ["N", "M", "clamp_fraction", "E1", "E2", "count", "k_value", "last_doubling_delta"] + [
        f"x_{i}" for i in range(fam.dimension)
    ]
    write_csv(out_dir / "ids.csv", header, rows)
    scan_cfg = cfg.get("scan")
    if scan_cfg:
        report = ids_modulus_scan(fam, float(scan_cfg["E_center"]), scan_cfg["h_values"], n)
        scan_rows = [
            [n, 2 * n + 1, 0.0, h, k, report.gamma_fit, report.residual] for h, k in report.points
        ]
        write_csv(
            out_dir / "ids_scan.csv",
            ["N", "M", "clamp_fraction", "h", "k_value", "gamma_fit", "residual"],
            scan_rows,
        )
        reports.append(report)
    return reports


def run_thouless(cfg: dict, out_dir: Path, seed=None) -> list:
    omega = parse_frequency(cfg["frequency"])
    fam = parse_jacobi_family(cfg["jacobi"], omega)
    n = _check_scales([cfg.get("N", 2000)])[0]
    grid = _grid(cfg, fam.dimension)
    energies = [float(e) for e in cfg["energies"]]
    doubling = bool(cfg.get("doubling", False))
    rows = []
    out = list(thouless_sweep(fam, energies, n, grid))
    for e, rep in zip(energies, out):
        rows.append([n, grid.points_per_dim, 0.0, e, rep.L_transfer, rep.L_thouless, rep.gap, rep.clamped_terms])
    if doubling:
        grid2 = TorusGrid(2 * grid.points_per_dim, fam.dimension)
        doubled = thouless_sweep(fam, energies, 2 * n, grid2)
        for e, rep2 in zip(energies, doubled):
            rows.append(
                [2 * n, grid2.points_per_dim, 0.0, e, rep2.L_transfer, rep2.L_thouless, rep2.gap, rep2.clamped_terms]
            )
        out.extend(doubled)
    header = ["N", "M", "clamp_fraction", "E", "L_transfer", "L_thouless", "gap", "clamped_terms"]
    write_csv(out_dir / "thouless.csv", header, rows)
    return out


def run_schedule(cfg: dict, out_dir: Path, seed=None):
    schedule = build_schedule(
        kappa0=float(cfg["kappa0"]),
        C=float(cfg["C"]),
        sigma=float(cfg.get("sigma", 1.0)),
        tau=float(cfg.get("tau", 1.0)),
        rho=float(cfg.get("rho", 1.0)),
        max_stages=int(cfg.get("max_stages", 8)),
        toy=bool(cfg.get("toy", False)),
    )
    header = ["N", "M", "clamp_fraction", "s", "kappa", "K", "delta", "admissible", "failed"]
    rows = [
        [st.N, 0, 0.0, st.s, st.kappa, st.K, st.delta, st.admissible, ";".join(st.failed)]
        for st in schedule.stages
    ]
    write_csv(out_dir / "schedule.csv", header, rows)
    return schedule


def run_ap_check(cfg: dict, out_dir: Path, seed=None) -> list:
    omega = parse_frequency(cfg["frequency"])
    A = parse_cocycle(cfg["cocycle"], omega)
    n = _check_scales([cfg.get("N", 32)])[0]
    n1_values = _check_scales(cfg.get("N1_values", [512]))
    points = int(cfg.get("points", 100))
    rows = []
    out = []
    for j in range(points):
        x = (j / points,) * A.dimension
        for n1 in n1_values:
            res = ap_residual(A, omega, x, n, n1)
            out.append(res)
            rows.append([n, 0, 0.0, x[0], n1, res.residual, res.bound, res.hypotheses_met])
    header = ["N", "M", "clamp_fraction", "x", "N1", "residual", "bound", "hypotheses_met"]
    write_csv(out_dir / "ap-check.csv", header, rows)
    return out


RUNNERS = {
    "le": run_le,
    "ldt": run_ldt,
    "continuity-cocycle": run_continuity_cocycle,
    "continuity-frequency": run_continuity_frequency,
    "ids": run_ids,
    "thouless": run_thouless,
    "schedule": run_schedule,
    "ap-check": run_ap_check,
}


def run_experiment(kind: str, cfg: dict, out_dir: Path, seed: int | None = None, threads: int = 1):
    """Dispatch one experiment and write its manifest sidecar.

    `threads` is accepted for interface compatibility; reductions use a
    fixed-shape tree, so results do not depend on it.
    """
    if kind not in RUNNERS:
        raise ValueError(f"unknown experiment kind {kind!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = RUNNERS[kind](cfg, out_dir, seed)
    wall = time.perf_counter() - start
    csv_files = sorted(p.name for p in out_dir.glob("*.csv"))
    write_manifest(out_dir, kind, cfg, seed, wall, csv_files)
    return result
