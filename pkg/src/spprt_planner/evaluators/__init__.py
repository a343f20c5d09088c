"""Evaluation methods for designed plans: exact lattice DP, grid recursions and Monte Carlo."""

from .base import EvaluatorRegistry, PlanEvaluator, registry
from .exact import ExactEvaluator, evaluate_exact, exact_transitions
from .grid import GridEvaluator, evaluate_grid
from .monte_carlo import MonteCarloEvaluator, simulate
from .oc import assemble_profile, oc_curve, oc_trend_violations, profile_plan

__all__ = [
    "EvaluatorRegistry",
    "PlanEvaluator",
    "registry",
    "ExactEvaluator",
    "evaluate_exact",
    "exact_transitions",
    "GridEvaluator",
    "evaluate_grid",
    "MonteCarloEvaluator",
    "simulate",
    "assemble_profile",
    "oc_curve",
    "oc_trend_violations",
    "profile_plan",
]
