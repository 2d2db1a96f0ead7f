"""Exception types shared across the library.

The command-line runner maps these onto exit codes: precondition
refusals exit 1, budget ceilings exit 3.
"""


class PreconditionError(ValueError):
    """A documented precondition of an operation was violated."""


class BudgetError(RuntimeError):
    """An enumeration or work budget was exceeded."""


class ResolutionError(PreconditionError):
    """A sampling grid is too coarse for the requested operation."""


class SingularPointError(ArithmeticError):
    """The cocycle determinant vanishes at the requested point."""


class ZeroProductError(ArithmeticError):
    """A transfer product collapsed to the exact zero matrix."""

    def __init__(self, step: int):
        super().__init__(f"transfer product vanished after {step} steps")
        self.step = step


class SingularQuadratureError(PreconditionError):
    """Too many log-determinant nodes were clamped; refine the grid."""


class InfeasibleScheduleError(PreconditionError):
    """Induction schedule parameters fail stage-0 admissibility."""
