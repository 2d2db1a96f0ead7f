"""Numerical laboratory for quasi-periodic matrix cocycles.

Finite-scale Lyapunov exponents of analytic M(2,C) cocycles over torus
shifts, large-deviation and avalanche-principle diagnostics, multi-scale
induction schedules, and the integrated density of states of the
associated Jacobi operators.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    InfeasibleScheduleError,
    PreconditionError,
    ResolutionError,
    SingularPointError,
    SingularQuadratureError,
    ZeroProductError,
)
from .torus import Frequency, TorusGrid, TorusPoint, check_diophantine, min_torus_norm, shift, torus_norm
from .cocycle import (
    AnalyticCocycle,
    LojasiewiczFit,
    TrigPoly,
    amo_cocycle,
    det_sublevel_measure,
    fit_lojasiewicz,
    jacobi_cocycle,
    operator_norm,
    renormalize,
    schrodinger_cocycle,
    strip_norm,
)
from .lyapunov import (
    InductionSchedule,
    LDTReport,
    LyapunovRecord,
    TransferProduct,
    ap_residual,
    build_schedule,
    convergence_probe,
    finite_le,
    finite_le_at_point,
    finite_le_profile,
    ldt_empirical,
    log_det_integral,
    transfer_product,
)
from .jacobi import (
    IDSReport,
    JacobiFamily,
    TruncatedOperator,
    eigen_count_below,
    ids,
    ids_modulus_scan,
    thouless_check,
    thouless_sweep,
    tridiag_eigenvalues,
    truncate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
