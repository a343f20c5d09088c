"""
Types module for defining data structures used across the package.
"""

from .errors import (
    CalibrationFailedError,
    ConfigurationError,
    DomainError,
    HistoryMismatchError,
    NumericalError,
    PlanFileError,
    PlannerError,
)
from .model import CostModel, DesignConfig, Hypotheses, StopRiskParams
from .profile import LatticeState, OCPoint, PartialProfile, TestProfile

__all__ = [
    "CalibrationFailedError",
    "ConfigurationError",
    "DomainError",
    "HistoryMismatchError",
    "NumericalError",
    "PlanFileError",
    "PlannerError",
    "CostModel",
    "DesignConfig",
    "Hypotheses",
    "StopRiskParams",
    "LatticeState",
    "OCPoint",
    "PartialProfile",
    "TestProfile",
]
