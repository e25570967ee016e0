"""Exception hierarchy shared across the package."""


class TodaError(Exception):
    """Base class for all errors raised by todalab."""


class ValidationError(TodaError, ValueError):
    """Invalid input data (rank, singularity strengths, solution parameters)."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(TodaError, ValueError):
    """Evaluation requested at a point where the quantity is undefined."""


class BranchCutError(DomainError):
    """Point lies on the branch cut while non-integer exponents are present."""


class InvalidSolutionError(TodaError):
    """Parameters do not define a solution (non-positive or non-real determinant)."""


class ConfigError(TodaError):
    """Ill-posed numerical configuration (grids, steps)."""
