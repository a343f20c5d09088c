"""
Lagrange multiplier calibration.

Finds (lambda0, lambda1) whose optimal plan hits target error probabilities.
The search is a Nelder-Mead simplex in (ln lambda0, ln lambda1) on the
objective max(|alpha - a*| / a*, |beta - b*| / b*), with alpha and beta taken
from the exact evaluator. Binomial lattices make exact attainment generally
impossible, so the search stops at a tolerance.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..design.engine import Plan, niod
from ..evaluators.exact import ExactEvaluator
from ..evaluators.oc import assemble_profile
from ..types.errors import CalibrationFailedError, DomainError, PlannerError
from ..types.model import DesignConfig
from ..types.profile import TestProfile

# Standard simplex coefficients
REFLECTION = 1.0
EXPANSION = 2.0
CONTRACTION = 0.5
SHRINK = 0.5
# Simplex diameter in log-lambda space below which the search has collapsed
MIN_DIAMETER = 1e-4


@dataclass(frozen=True)
class CalibrationSpec:
    """Design problem without multipliers plus calibration targets and search settings."""
    base: DesignConfig
    target_alpha: float
    target_beta: float
    init_lambda0: float
    init_lambda1: float
    max_iter: int = 200
    dist_tol: float = 0.01
    simplex_scale: float = 0.25
    restart: bool = False

    def __post_init__(self):
        for name in ("target_alpha", "target_beta"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise DomainError(f"{name} must lie strictly between 0 and 1, got {value}")
        for name in ("init_lambda0", "init_lambda1"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        if self.max_iter < 0 or self.dist_tol < 0 or not self.simplex_scale > 0:
            raise DomainError("maxIter and distTol must be nonnegative and simplexScale positive")

    def distance(self, alpha: float, beta: float) -> float:
        return max(
            abs(alpha - self.target_alpha) / self.target_alpha,
            abs(beta - self.target_beta) / self.target_beta,
        )


@dataclass
class TraceEntry:
    """One objective evaluation of the search."""
    evaluation: int
    iteration: int
    step: str
    lambda0: float
    lambda1: float
    alpha: Optional[float]
    beta: Optional[float]
    objective: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class CalibrationResult:
    lambda0: float
    lambda1: float
    plan: Plan
    profile: TestProfile
    objective: float
    iterations: int
    evaluations: int
    reason: str
    trace: List[TraceEntry] = field(default_factory=list)

    def summary(self) -> Dict[str, Any]:
        return {
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "objective": self.objective,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "reason": self.reason,
            "profile": self.profile.to_dict(),
        }


@dataclass
class _Evaluation:
    objective: float
    plan: Optional[Plan] = None
    profile: Optional[TestProfile] = None


class Calibrator:
    """Runs the simplex search for one spec, caching objective evaluations."""

    def __init__(self, spec: CalibrationSpec):
        self.spec = spec
        self.trace: List[TraceEntry] = []
        self._cache: Dict[Tuple[float, float], _Evaluation] = {}
        self._iteration = 0
        self.logger = logging.getLogger(__name__)

    def design_and_profile(self, lambda0: float, lambda1: float) -> Tuple[Plan, TestProfile]:
        plan = niod(self.spec.base.with_lambdas(lambda0, lambda1))
        evaluator = ExactEvaluator()
        hyp = plan.config.hyp
        under_h0 = evaluator.evaluate(plan, hyp.theta0)
        under_h1 = evaluator.evaluate(plan, hyp.theta1)
        return plan, assemble_profile(plan, under_h0, under_h1, evaluator.name)

    def _evaluate(self, point: np.ndarray, step: str) -> _Evaluation:
        key = (float(point[0]), float(point[1]))
        if key in self._cache:
            return self._cache[key]

        lambda0, lambda1 = math.exp(key[0]), math.exp(key[1])
        try:
            plan, profile = self.design_and_profile(lambda0, lambda1)
            result = _Evaluation(self.spec.distance(profile.alpha, profile.beta), plan, profile)
        except PlannerError as e:
            # an infeasible design pushes the simplex away
            self.logger.debug(f"Design failed at lambda=({lambda0:.6g}, {lambda1:.6g}): {e}")
            result = _Evaluation(math.inf)

        self._cache[key] = result
        self.trace.append(TraceEntry(
            evaluation=len(self.trace) + 1,
            iteration=self._iteration,
            step=step,
            lambda0=lambda0,
            lambda1=lambda1,
            alpha=result.profile.alpha if result.profile else None,
            beta=result.profile.beta if result.profile else None,
            objective=result.objective,
        ))
        return result

    def objective(self, lambda0: float, lambda1: float) -> float:
        if not (lambda0 > 0 and lambda1 > 0):
            raise DomainError("Multipliers must be positive")
        return self._evaluate(np.log([lambda0, lambda1]), "probe").objective

    def run(self) -> CalibrationResult:
        spec = self.spec
        start = np.log([spec.init_lambda0, spec.init_lambda1])
        best_point, reason = self._search(start, spec.simplex_scale)

        if reason == "max_iter" and self._cache[best_point].objective > 10 * spec.dist_tol and spec.restart:
            self.logger.info("Restarting simplex from the best vertex with half the scale")
            best_point, reason = self._search(np.array(best_point), spec.simplex_scale / 2)

        best = self._cache[best_point]
        lambda0, lambda1 = math.exp(best_point[0]), math.exp(best_point[1])
        if best.plan is None or (reason == "max_iter" and best.objective > 10 * spec.dist_tol):
            raise CalibrationFailedError(
                f"Calibration stopped after {self._iteration} iterations with objective {best.objective:.4g}",
                best_lambdas=(lambda0, lambda1),
                objective=best.objective,
                result=self._result(best_point, reason) if best.plan is not None else None,
            )
        return self._result(best_point, reason)

    def _result(self, point: Tuple[float, float], reason: str) -> CalibrationResult:
        best = self._cache[point]
        return CalibrationResult(
            lambda0=math.exp(point[0]),
            lambda1=math.exp(point[1]),
            plan=best.plan,
            profile=best.profile,
            objective=best.objective,
            iterations=self._iteration,
            evaluations=len(self.trace),
            reason=reason,
            trace=list(self.trace),
        )

    def _search(self, start: np.ndarray, scale: float) -> Tuple[Tuple[float, float], str]:
        """Nelder-Mead from ``start``; returns the best vertex key and the stop reason."""
        spec = self.spec
        first = self._evaluate(start, "initial")
        if first.objective <= spec.dist_tol:
            return (float(start[0]), float(start[1])), "converged"

        simplex = [(start, first.objective)]
        for axis in range(2):
            vertex = start.copy()
            vertex[axis] += scale
            simplex.append((vertex, self._evaluate(vertex, "initial").objective))

        iterations = 0
        while True:
            simplex.sort(key=lambda v: v[1])
            best_point, best_value = simplex[0]
            diameter = max(np.linalg.norm(u[0] - v[0]) for u, v in combinations(simplex, 2))
            self.logger.debug(
                f"Iteration {iterations}: best objective {best_value:.5g} at "
                f"lambda=({math.exp(best_point[0]):.6g}, {math.exp(best_point[1]):.6g})"
            )
            if best_value <= spec.dist_tol:
                reason = "converged"
                break
            if diameter <= MIN_DIAMETER:
                reason = "collapsed"
                break
            if iterations >= spec.max_iter:
                reason = "max_iter"
                break
            iterations += 1
            self._iteration += 1

            worst_point, worst_value = simplex[-1]
            second_worst = simplex[-2][1]
            centroid = np.mean([v[0] for v in simplex[:-1]], axis=0)

            # Reflection
            reflected = centroid + REFLECTION * (centroid - worst_point)
            reflected_value = self._evaluate(reflected, "reflect").objective
            if best_value <= reflected_value < second_worst:
                simplex[-1] = (reflected, reflected_value)
                continue

            # Expansion
            if reflected_value < best_value:
                expanded = centroid + EXPANSION * (centroid - worst_point)
                expanded_value = self._evaluate(expanded, "expand").objective
                if expanded_value < reflected_value:
                    simplex[-1] = (expanded, expanded_value)
                else:
                    simplex[-1] = (reflected, reflected_value)
                continue

            # Contraction, outside when the reflection improved on the worst vertex
            if reflected_value < worst_value:
                contracted = centroid + CONTRACTION * (reflected - centroid)
                contracted_value = self._evaluate(contracted, "contract").objective
                if contracted_value <= reflected_value:
                    simplex[-1] = (contracted, contracted_value)
                    continue
            else:
                contracted = centroid + CONTRACTION * (worst_point - centroid)
                contracted_value = self._evaluate(contracted, "contract").objective
                if contracted_value < worst_value:
                    simplex[-1] = (contracted, contracted_value)
                    continue

            # Shrink towards the best vertex
            shrunk = [simplex[0]]
            for point, _ in simplex[1:]:
                moved = best_point + SHRINK * (point - best_point)
                shrunk.append((moved, self._evaluate(moved, "shrink").objective))
            simplex = shrunk

        point = simplex[0][0]
        return (float(point[0]), float(point[1])), reason


def calibration_objective(spec: CalibrationSpec, lambda0: float, lambda1: float) -> float:
    return Calibrator(spec).objective(lambda0, lambda1)


def calibrate(spec: CalibrationSpec) -> CalibrationResult:
    """Search multipliers for the calibration targets; raises CalibrationFailedError on failure."""
    return Calibrator(spec).run()


def lambda_trend_check(
    spec: CalibrationSpec,
    lambda0: float,
    lambda1: float,
    step: float = 0.25
) -> Dict[str, int]:
    """
    Probe a 3x3 log-lambda grid around (lambda0, lambda1) and count how often
    alpha falls (or stays) as lambda0 grows and beta as lambda1 grows.
    """
    calibrator = Calibrator(spec)
    offsets = (-step, 0.0, step)
    alphas = np.full((3, 3), np.nan)
    betas = np.full((3, 3), np.nan)
    for i, d0 in enumerate(offsets):
        for j, d1 in enumerate(offsets):
            try:
                _, profile = calibrator.design_and_profile(lambda0 * math.exp(d0), lambda1 * math.exp(d1))
            except PlannerError:
                continue
            alphas[i, j] = profile.alpha
            betas[i, j] = profile.beta

    checks = held = 0
    for fixed in range(3):
        for k in range(2):
            for later, earlier in ((alphas[k + 1, fixed], alphas[k, fixed]), (betas[fixed, k + 1], betas[fixed, k])):
                if np.isnan(later) or np.isnan(earlier):
                    continue
                checks += 1
                held += int(later <= earlier + 1e-12)
    return {"comparisons": checks, "consistent": held}
