"""Exception hierarchy shared by the library and the command line."""

from typing import Optional, Tuple


class PlannerError(Exception):
    """Base class for every error raised by spprt_planner."""
    pass


class ConfigurationError(PlannerError):
    """Raised when configuration is invalid or missing."""
    pass


class DomainError(PlannerError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""
    pass


class PlanFileError(PlannerError):
    """Raised when a plan file cannot be read or has an unexpected schema."""
    pass


class NumericalError(PlannerError):
    """Raised when a numerical procedure cannot produce a trustworthy result."""
    pass


class HistoryMismatchError(PlannerError):
    """Raised when an interim history diverges from what the plan prescribes."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class CalibrationFailedError(PlannerError):
    """Raised when the multiplier search ends far from the target error levels."""

    def __init__(self, message: str, best_lambdas: Tuple[float, float], objective: float,
        result: Optional[object] = None
    ):
        super().__init__(message)
        self.best_lambdas = best_lambdas
        self.objective = objective
        self.result = result
