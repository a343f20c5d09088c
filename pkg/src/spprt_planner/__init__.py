"""
SPPRT Planner - optimal truncated sequentially planned tests for Bernoulli data.

Designs cost-optimal group-sequential tests whose next group size depends on
the running likelihood ratio, and evaluates their error probabilities,
sampling costs and operating characteristics.
"""

__version__ = "1.0.0"

from .analysis.calibration import CalibrationSpec, calibrate
from .analysis.fss import np_min_sample_size, relative_efficiency
from .core.config_manager import ConfigManager
from .design.engine import Plan, niod
from .evaluators import evaluate_exact, evaluate_grid, profile_plan, simulate
from .types.errors import ConfigurationError, PlannerError
from .types.model import CostModel, DesignConfig, Hypotheses, StopRiskParams

__all__ = [
    "CalibrationSpec",
    "calibrate",
    "np_min_sample_size",
    "relative_efficiency",
    "ConfigManager",
    "Plan",
    "niod",
    "evaluate_exact",
    "evaluate_grid",
    "profile_plan",
    "simulate",
    "ConfigurationError",
    "PlannerError",
    "CostModel",
    "DesignConfig",
    "Hypotheses",
    "StopRiskParams",
]
