"""
Exact forward evaluation on the (n, s) lattice.

For Bernoulli data the likelihood ratio after n observations with s successes
is r^s q^(n-s), and the plan's rules depend only on that value and on the
allowance left. Probability mass is therefore pushed forward stage by stage on
merged (groups used, n, s) states; one binomial convolution per group size
moves the continuing mass to the next stage.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from ..design.engine import Plan
from ..design.lr_model import group_distribution
from ..types.errors import NumericalError
from ..types.model import CostModel
from ..types.profile import LatticeState, PartialProfile
from .base import PlanEvaluator, registry

# Tolerated drift of total probability mass before the run is declared broken
_MASS_FAILURE = 1e-8

Frontier = Dict[int, Tuple[int, np.ndarray]]
Transitions = Dict[Tuple[int, int, int], int]


def _trimmed(s_lo: int, probs: np.ndarray) -> Optional[Tuple[int, np.ndarray]]:
    support = np.flatnonzero(probs)
    if support.size == 0:
        return None
    return s_lo + int(support[0]), probs[support[0]:support[-1] + 1]


def _merge(frontier: Frontier, n: int, s_lo: int, probs: np.ndarray) -> None:
    """Add a block of mass over s = s_lo.. to the states with n observations."""
    block = _trimmed(s_lo, probs)
    if block is None:
        return
    s_lo, probs = block
    if n not in frontier:
        frontier[n] = (s_lo, probs.copy())
        return
    old_lo, old = frontier[n]
    lo = min(old_lo, s_lo)
    hi = max(old_lo + old.size, s_lo + probs.size)
    merged = np.zeros(hi - lo)
    merged[old_lo - lo:old_lo - lo + old.size] += old
    merged[s_lo - lo:s_lo - lo + probs.size] += probs
    frontier[n] = (lo, merged)


def frontier_states(frontier: Frontier, groups_used: int):
    """Expand a frontier into LatticeState records, skipping zero-mass counts."""
    for n in sorted(frontier):
        s_lo, probs = frontier[n]
        for offset, prob in enumerate(probs):
            if prob > 0:
                yield LatticeState(groups_used, n, s_lo + offset, float(prob))


class ExactEvaluator(PlanEvaluator):
    """
    Forward dynamic programme over merged lattice states.

    ``prune`` drops states whose probability falls below the threshold after
    each stage. Dropped mass is never silently lost: it is reported as
    ``pruned_mass`` and bounds the probability error, while
    ``pruned_mass * K_eff * max c(m)`` bounds the cost error.
    """

    name = "exact"

    def __init__(self, prune: float = 0.0):
        if prune < 0:
            raise ValueError("Pruning threshold must be nonnegative")
        self.prune = prune
        self.logger = logging.getLogger(__name__)

    def evaluate(self,
        plan: Plan,
        theta: float,
        cost: Optional[CostModel] = None
    ) -> PartialProfile:
        return self.run(plan, theta, cost)

    def run(self,
        plan: Plan,
        theta: float,
        cost: Optional[CostModel] = None,
        transitions: Optional[Transitions] = None
    ) -> PartialProfile:
        """
        Evaluate the plan; when ``transitions`` is given, it is filled with the
        action taken at every reachable (groups used, n, s) state.
        """
        prices = self.prepare(plan, theta, cost)
        hyp = plan.config.hyp
        m1 = plan.m1

        exp_cost = prices[m1]
        exp_groups = 1.0
        exp_obs = float(m1)
        accept_h0 = stopped = tie_mass = pruned = mass_error = 0.0
        if transitions is not None:
            transitions[(0, 0, 0)] = m1

        frontier: Frontier = {m1: (0, group_distribution(hyp, m1, theta).probs.copy())}
        for used in range(1, plan.k_eff + 1):
            allowance = plan.k_eff - used
            ns = sorted(frontier)
            blocks = [frontier[n] for n in ns]
            log_z = np.concatenate([
                hyp.log_lr(n, s_lo + np.arange(probs.size)) for n, (s_lo, probs) in zip(ns, blocks)
            ])
            mass = np.concatenate([probs for _, probs in blocks])
            actions = plan.actions(allowance, log_z)

            stop = actions == 0
            accept_h0 += float(mass[stop & ~plan.accepts_h1(log_z)].sum())
            tie_mass += float(mass[stop & plan.is_tie(log_z)].sum())
            stopped += float(mass[stop].sum())

            if transitions is not None:
                starts = dict(zip(ns, np.cumsum([0] + [probs.size for _, probs in blocks])))
                for state in frontier_states(frontier, used):
                    index = starts[state.n] + state.s - frontier[state.n][0]
                    transitions[(used, state.n, state.s)] = int(actions[index])

            successor: Frontier = {}
            offset = 0
            for n, (s_lo, probs) in zip(ns, blocks):
                acts = actions[offset:offset + probs.size]
                offset += probs.size
                for m in np.unique(acts[acts > 0]):
                    m = int(m)
                    block = _trimmed(s_lo, np.where(acts == m, probs, 0.0))
                    if block is None:
                        continue
                    w_lo, weights = block
                    moved = float(weights.sum())
                    exp_cost += prices[m] * moved
                    exp_groups += moved
                    exp_obs += m * moved
                    pmf = group_distribution(hyp, m, theta).probs
                    _merge(successor, n + m, w_lo, np.convolve(weights, pmf))

            if self.prune > 0:
                pruned += self._prune(successor)
            frontier = successor

            remaining = sum(float(probs.sum()) for _, probs in frontier.values())
            drift = abs(stopped + pruned + remaining - 1.0)
            mass_error = max(mass_error, drift)
            if drift > _MASS_FAILURE:
                raise NumericalError(
                    f"Probability mass drifted by {drift:.3g} after {used} groups"
                )
            self.logger.debug(
                f"theta={theta}: stage {used} stopped {stopped:.12f}, "
                f"{len(frontier)} live n values"
            )
            if not frontier:
                break

        return PartialProfile(
            theta=float(theta),
            p_accept_h0=accept_h0,
            exp_cost=exp_cost,
            exp_groups=exp_groups,
            exp_obs=exp_obs,
            method=self.name,
            tie_mass=tie_mass,
            mass_error=mass_error,
            pruned_mass=pruned,
            error_bound=pruned * plan.k_eff * max(prices.values()),
        )

    def _prune(self, frontier: Frontier) -> float:
        dropped = 0.0
        for n in list(frontier):
            s_lo, probs = frontier[n]
            small = probs < self.prune
            if not small.any():
                continue
            dropped += float(probs[small].sum())
            kept = np.where(small, 0.0, probs)
            block = _trimmed(s_lo, kept)
            if block is None:
                del frontier[n]
            else:
                frontier[n] = block
        return dropped


def evaluate_exact(
    plan: Plan,
    theta: float,
    cost: Optional[CostModel] = None,
    prune: float = 0.0
) -> PartialProfile:
    return ExactEvaluator(prune=prune).evaluate(plan, theta, cost)


def exact_transitions(plan: Plan, theta: float) -> Transitions:
    """Action table of every state the plan reaches with positive probability under theta."""
    table: Transitions = {}
    ExactEvaluator().run(plan, theta, transitions=table)
    return table


registry.register(ExactEvaluator.name, ExactEvaluator)
