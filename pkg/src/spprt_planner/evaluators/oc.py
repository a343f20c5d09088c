"""
Operating characteristic curves and full test profiles.
"""

import logging
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..core.parallel import ordered_map
from ..design.engine import Plan
from ..types.errors import DomainError
from ..types.model import CostModel
from ..types.profile import OCPoint, PartialProfile, TestProfile
from .base import registry
from .exact import ExactEvaluator

logger = logging.getLogger(__name__)

# Slack allowed before a step of the OC curve counts as a trend violation
_TREND_SLACK = 1e-12


def _oc_point(plan: Plan, theta: float) -> OCPoint:
    try:
        profile = ExactEvaluator().evaluate(plan, theta)
    except DomainError as e:
        return OCPoint(theta=theta, p_accept_h0=None, error=str(e))
    return OCPoint(theta=theta, p_accept_h0=profile.p_accept_h0)


def oc_curve(plan: Plan, thetas: Sequence[float], workers: Optional[int] = 1) -> List[OCPoint]:
    """P_theta(accept H0) for each theta; invalid thetas are reported per point."""
    return ordered_map(partial(_oc_point, plan), [float(t) for t in thetas], workers)


def oc_trend_violations(plan: Plan, points: Sequence[OCPoint]) -> int:
    """
    Count adjacent pairs (in theta order) where the OC curve moves against the
    expected direction: nonincreasing in theta when theta1 > theta0.
    """
    valid = sorted(
        (p.theta, p.p_accept_h0) for p in points if p.p_accept_h0 is not None
    )
    sign = 1.0 if plan.config.hyp.increasing else -1.0
    violations = 0
    for (_, left), (_, right) in zip(valid, valid[1:]):
        if sign * (right - left) > _TREND_SLACK:
            violations += 1
    if violations:
        logger.warning(f"OC curve breaks its monotone trend at {violations} step(s)")
    return violations


def _combine_stderr(under_h0: PartialProfile, under_h1: PartialProfile) -> Optional[Dict[str, float]]:
    if under_h0.stderr is None or under_h1.stderr is None:
        return None
    return {
        "alpha": under_h0.stderr["p_accept_h0"],
        "beta": under_h1.stderr["p_accept_h0"],
        "asc0": under_h0.stderr["exp_cost"],
        "asc1": under_h1.stderr["exp_cost"],
        "exp_groups0": under_h0.stderr["exp_groups"],
        "exp_groups1": under_h1.stderr["exp_groups"],
        "exp_obs0": under_h0.stderr["exp_obs"],
        "exp_obs1": under_h1.stderr["exp_obs"],
    }


def profile_plan(
    plan: Plan,
    method: str = "exact",
    cost: Optional[CostModel] = None,
    thetas: Sequence[float] = (),
    workers: Optional[int] = 1,
    **options: Any
) -> Tuple[TestProfile, Dict[str, PartialProfile]]:
    """
    Evaluate a plan under both hypotheses (and optional OC thetas).

    Returns the assembled TestProfile plus the raw partial profiles keyed by
    "h0" and "h1" for callers that need the exact-method bookkeeping.
    """
    if method == "mc":
        options.setdefault("workers", workers)
    evaluator = registry.create(method, **options)
    hyp = plan.config.hyp
    under_h0 = evaluator.evaluate(plan, hyp.theta0, cost)
    under_h1 = evaluator.evaluate(plan, hyp.theta1, cost)

    profile = assemble_profile(plan, under_h0, under_h1, method)
    if thetas:
        profile.oc_points = oc_curve(plan, thetas, workers)
    return profile, {"h0": under_h0, "h1": under_h1}


def assemble_profile(
    plan: Plan,
    under_h0: PartialProfile,
    under_h1: PartialProfile,
    method: str
) -> TestProfile:
    """Combine the evaluations at theta0 and theta1 into alpha, beta and the ASCs."""
    gamma = plan.config.gamma
    return TestProfile(
        alpha=1.0 - under_h0.p_accept_h0,
        beta=under_h1.p_accept_h0,
        asc0=under_h0.exp_cost,
        asc1=under_h1.exp_cost,
        asc_gamma=(1.0 - gamma) * under_h0.exp_cost + gamma * under_h1.exp_cost,
        exp_groups0=under_h0.exp_groups,
        exp_groups1=under_h1.exp_groups,
        exp_obs0=under_h0.exp_obs,
        exp_obs1=under_h1.exp_obs,
        method=method,
        stderr=_combine_stderr(under_h0, under_h1),
    )
