"""
Evaluator abstraction.

Every evaluation method computes the same partial profile of a frozen plan
under one data-generating theta. Methods are registered by name so the CLI can
pick one from ``--method``.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

from ..design.engine import Plan
from ..design.lr_model import check_theta
from ..types.errors import DomainError
from ..types.model import CostModel
from ..types.profile import PartialProfile


class PlanEvaluator(ABC):
    """Abstract base class for operating-characteristic evaluators."""

    name = ""

    @abstractmethod
    def evaluate(self,
        plan: Plan,
        theta: float,
        cost: Optional[CostModel] = None
    ) -> PartialProfile:
        """
        Evaluate a plan under theta.

        Args:
            plan: Frozen design output
            theta: Data-generating success probability
            cost: Cost model charged per group; defaults to the design cost

        Returns:
            PartialProfile with acceptance probability, cost, groups and observations
        """
        pass

    @staticmethod
    def prepare(plan: Plan, theta: float, cost: Optional[CostModel]) -> Dict[int, float]:
        """Validate theta and price every eligible group size."""
        check_theta(theta)
        cost = cost or plan.config.cost
        return {m: float(cost.cost(m)) for m in plan.config.group_sizes}


class EvaluatorRegistry:
    """Registry for evaluation method implementations."""

    def __init__(self):
        self._evaluators: Dict[str, type] = {}

    def register(self, name: str, evaluator_class: type):
        """Register an evaluator implementation."""
        self._evaluators[name] = evaluator_class

    def get(self, name: str) -> Optional[type]:
        """Get an evaluator class by name."""
        return self._evaluators.get(name)

    def create(self, name: str, **options: Any) -> PlanEvaluator:
        """Instantiate a registered evaluator with method-specific options."""
        evaluator_class = self.get(name)
        if evaluator_class is None:
            raise DomainError(
                f"Unknown evaluation method '{name}' (known: {', '.join(self.list_methods())})"
            )
        return evaluator_class(**options)

    def list_methods(self) -> List[str]:
        """List all registered method names."""
        return list(self._evaluators.keys())


# Global registry instance
registry = EvaluatorRegistry()
