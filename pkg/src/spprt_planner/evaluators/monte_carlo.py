"""
Monte Carlo simulation of full trajectories.

Trial i draws from its own generator seeded with (seed, i), so results depend
only on (seed, trials) and never on how trials are split across workers.
"""

import logging
import math
from functools import partial
from typing import Dict, Optional, Tuple

import numpy as np

from ..core.parallel import ordered_map
from ..design.engine import Plan
from ..types.errors import DomainError
from ..types.model import CostModel
from ..types.profile import PartialProfile
from .base import PlanEvaluator, registry

_CHUNK_TRIALS = 10_000
_FIELDS = ("p_accept_h0", "exp_cost", "exp_groups", "exp_obs")


def run_trial(plan: Plan, theta: float, prices: Dict[int, float], rng: np.random.Generator) -> Tuple[float, float, int, int]:
    """One trajectory: (accepted H0, cost paid, groups taken, observations)."""
    hyp = plan.config.hyp
    n = s = groups = 0
    cost = 0.0
    m = plan.m1
    while True:
        s += int(rng.binomial(m, theta))
        n += m
        cost += prices[m]
        groups += 1
        log_z = hyp.log_lr(n, s)
        allowance = plan.k_eff - groups
        m = int(plan.actions(allowance, [log_z])[0]) if allowance > 0 else 0
        if m == 0:
            accepted_h0 = 0.0 if plan.accepts_h1(log_z) else 1.0
            return accepted_h0, cost, groups, n


def _simulate_chunk(plan: Plan, theta: float, prices: Dict[int, float], seed: int, bounds: Tuple[int, int]) -> np.ndarray:
    start, stop = bounds
    out = np.empty((stop - start, 4))
    for row, trial in enumerate(range(start, stop)):
        rng = np.random.default_rng([seed, trial])
        out[row] = run_trial(plan, theta, prices, rng)
    return out


class MonteCarloEvaluator(PlanEvaluator):
    """Sample means with standard errors over independent trajectories."""

    name = "mc"

    def __init__(self, trials: int = 100_000, seed: Optional[int] = None, workers: Optional[int] = 1):
        if trials < 1:
            raise DomainError(f"trials must be at least 1, got {trials}")
        if seed is None:
            raise DomainError("Monte Carlo evaluation requires an explicit seed")
        if seed < 0:
            raise DomainError(f"seed must be nonnegative, got {seed}")
        self.trials = int(trials)
        self.seed = int(seed)
        self.workers = workers
        self.logger = logging.getLogger(__name__)

    def evaluate(self,
        plan: Plan,
        theta: float,
        cost: Optional[CostModel] = None
    ) -> PartialProfile:
        prices = self.prepare(plan, theta, cost)
        chunks = [
            (start, min(start + _CHUNK_TRIALS, self.trials))
            for start in range(0, self.trials, _CHUNK_TRIALS)
        ]
        task = partial(_simulate_chunk, plan, float(theta), prices, self.seed)
        samples = np.vstack(ordered_map(task, chunks, self.workers))

        means = samples.mean(axis=0)
        if self.trials > 1:
            errors = samples.std(axis=0, ddof=1) / math.sqrt(self.trials)
        else:
            errors = np.zeros(4)
        self.logger.debug(
            f"theta={theta}: {self.trials} trials, groups in "
            f"[{int(samples[:, 2].min())}, {int(samples[:, 2].max())}]"
        )
        return PartialProfile(
            theta=float(theta),
            p_accept_h0=float(means[0]),
            exp_cost=float(means[1]),
            exp_groups=float(means[2]),
            exp_obs=float(means[3]),
            method=self.name,
            stderr={name: float(err) for name, err in zip(_FIELDS, errors)},
        )


def simulate(
    plan: Plan,
    theta: float,
    cost: Optional[CostModel],
    trials: int,
    seed: int,
    workers: Optional[int] = 1
) -> PartialProfile:
    return MonteCarloEvaluator(trials=trials, seed=seed, workers=workers).evaluate(plan, theta, cost)


registry.register(MonteCarloEvaluator.name, MonteCarloEvaluator)
