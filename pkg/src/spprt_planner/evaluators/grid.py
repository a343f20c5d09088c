"""
Backward grid recursions for the acceptance probability and sampling cost.

With j groups still allowed, d_j(z) is the probability of ending in H0 and
l_j(z) the expected cost still to be paid. Outside the continuation interval
of allowance j both are closed form (d = 1{H0 decided}, l = 0). Inside, they
are sampled on the envelope's nodes plus every likelihood ratio the plan can
actually reach with j groups left, and interpolated linearly in z in between.

The reachable points matter: d_j jumps wherever the plan's group size or the
H0/H1 decision changes, and interpolating across such a jump between two
design nodes costs far more than the grid step suggests. A query within
``_SNAP`` of a node in log space reads the node's value directly.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from ..design.engine import Plan
from ..design.lr_model import group_distribution
from ..types.model import CostModel
from ..types.profile import PartialProfile
from .base import PlanEvaluator, registry

# Rows of the stacked recursion: acceptance probability, cost, groups, observations
_ACCEPT, _COST, _GROUPS, _OBS = range(4)
# Log-z distance under which two points count as the same likelihood ratio
_SNAP = 1e-9

ReachableStates = Dict[int, Tuple[np.ndarray, np.ndarray, np.ndarray]]


def _distinct(log_z: np.ndarray) -> np.ndarray:
    """Indices of one representative per cluster of log z values closer than _SNAP."""
    if log_z.size == 0:
        return np.zeros(0, dtype=int)
    order = np.argsort(log_z, kind="stable")
    ordered = log_z[order]
    keep = np.concatenate(([True], np.diff(ordered) > _SNAP))
    return order[keep]


def _away_from(points: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Mask of the log z points farther than _SNAP from every anchor."""
    if anchors.size == 0:
        return np.ones(points.size, dtype=bool)
    ordered = np.sort(anchors)
    idx = np.searchsorted(ordered, points)
    below = ordered[np.maximum(idx - 1, 0)]
    above = ordered[np.minimum(idx, ordered.size - 1)]
    gap = np.minimum(np.abs(points - below), np.abs(points - above))
    return gap > _SNAP


def reachable_states(plan: Plan) -> ReachableStates:
    """
    Continuing states of the plan, keyed by the allowance left when they are met.

    Each entry holds (n, s, group size) arrays, one row per distinct likelihood
    ratio inside that allowance's continuation interval. States are carried as
    (n, s) counts so log z is computed the way every other evaluator does.
    Reachability depends on the plan only, not on theta.
    """
    hyp = plan.config.hyp
    states: ReachableStates = {}
    n = np.full(plan.m1 + 1, plan.m1)
    s = np.arange(plan.m1 + 1)

    for allowance in range(plan.k_eff - 1, 0, -1):
        if n.size == 0:
            break
        reps = _distinct(hyp.log_lr(n, s))
        n, s = n[reps], s[reps]
        actions = plan.actions(allowance, hyp.log_lr(n, s))
        go = actions > 0
        n, s, actions = n[go], s[go], actions[go]
        states[allowance] = (n, s, actions)

        next_n, next_s = [], []
        for m in np.unique(actions):
            m = int(m)
            sel = actions == m
            next_n.append(np.repeat(n[sel] + m, m + 1))
            next_s.append((s[sel][:, None] + np.arange(m + 1)[None, :]).ravel())
        n = np.concatenate(next_n) if next_n else np.zeros(0, dtype=int)
        s = np.concatenate(next_s) if next_s else np.zeros(0, dtype=int)
    return states


class _StackedRecursion:
    """d_j and the three l_j variants for one allowance level."""

    def __init__(
        self,
        plan: Plan,
        allowance: int,
        log_nodes: Optional[np.ndarray] = None,
        values: Optional[np.ndarray] = None
    ):
        self.plan = plan
        self.interval = plan.envelopes[allowance].interval
        self.log_nodes = log_nodes
        self.values = values
        if log_nodes is not None:
            self.nodes = np.exp(log_nodes)

    def evaluate(self, log_z: np.ndarray) -> np.ndarray:
        """Shape (4, len(log_z)) matrix of function values."""
        out = np.zeros((4, log_z.size))
        out[_ACCEPT] = ~self.plan.accepts_h1(log_z)
        if self.interval is None:
            return out
        a, b = self.interval
        with np.errstate(over="ignore"):
            z = np.exp(log_z)
        inside = (z >= a) & (z <= b)
        if not inside.any():
            return out

        query = log_z[inside]
        right = np.clip(np.searchsorted(self.log_nodes, query), 1, self.log_nodes.size - 1)
        left = right - 1
        nearest = np.where(
            query - self.log_nodes[left] <= self.log_nodes[right] - query, left, right
        )
        snapped = np.abs(query - self.log_nodes[nearest]) <= _SNAP
        for row in range(4):
            row_values = np.interp(z[inside], self.nodes, self.values[row])
            row_values[snapped] = self.values[row, nearest[snapped]]
            out[row, inside] = row_values
        return out


class GridEvaluator(PlanEvaluator):
    """Function recursions over allowance 0..K_eff-1 on the design grid."""

    name = "grid"

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def evaluate(self,
        plan: Plan,
        theta: float,
        cost: Optional[CostModel] = None
    ) -> PartialProfile:
        prices = self.prepare(plan, theta, cost)
        states = reachable_states(plan)
        level = _StackedRecursion(plan, 0)

        for allowance in range(1, plan.k_eff):
            level = self._next_level(plan, level, allowance, theta, prices, states)

        dist = group_distribution(plan.config.hyp, plan.m1, theta)
        tail = level.evaluate(dist.log_lr) @ dist.probs
        return PartialProfile(
            theta=float(theta),
            p_accept_h0=float(tail[_ACCEPT]),
            exp_cost=prices[plan.m1] + float(tail[_COST]),
            exp_groups=1.0 + float(tail[_GROUPS]),
            exp_obs=plan.m1 + float(tail[_OBS]),
            method=self.name,
        )

    def _next_level(self,
        plan: Plan,
        previous: _StackedRecursion,
        allowance: int,
        theta: float,
        prices: Dict[int, float],
        states: ReachableStates
    ) -> _StackedRecursion:
        hyp = plan.config.hyp
        empty = np.zeros(0, dtype=int)
        n, s, state_actions = states.get(allowance, (empty, empty, empty))
        reach_log = hyp.log_lr(n, s).astype(float)

        # Design nodes step through z by the group's LR factors
        design_log = np.log(plan.envelopes[allowance].nodes)
        design_log = design_log[_away_from(design_log, reach_log)]
        design_values = self._continue(
            plan, previous, theta, prices, design_log, plan.actions(allowance, design_log),
            lambda sel, dist: (design_log[sel][:, None] + dist.log_lr[None, :]).ravel(),
        )
        # Reachable states step through (n, s) so queries land on the next level's nodes
        reach_values = self._continue(
            plan, previous, theta, prices, reach_log, state_actions,
            lambda sel, dist: hyp.log_lr(
                n[sel][:, None] + dist.m, s[sel][:, None] + dist.successes[None, :]
            ).ravel(),
        )

        log_nodes = np.concatenate((reach_log, design_log))
        values = np.concatenate((reach_values, design_values), axis=1)
        keep = _distinct(log_nodes)
        self.logger.debug(
            f"theta={theta}: grid level {allowance} on {keep.size} nodes "
            f"({reach_log.size} reachable)"
        )
        return _StackedRecursion(plan, allowance, log_nodes[keep], values[:, keep])

    @staticmethod
    def _continue(plan, previous, theta, prices, log_z, actions, successors) -> np.ndarray:
        """Values at log_z under the given actions; successors(sel, dist) builds the queries."""
        values = np.zeros((4, log_z.size))
        values[_ACCEPT] = ~plan.accepts_h1(log_z)
        for m in np.unique(actions[actions > 0]):
            m = int(m)
            sel = actions == m
            dist = group_distribution(plan.config.hyp, m, theta)
            queries = successors(sel, dist)
            stacked = previous.evaluate(queries).reshape(4, int(sel.sum()), dist.probs.size)
            values[:, sel] = stacked @ dist.probs
            values[_COST, sel] += prices[m]
            values[_GROUPS, sel] += 1.0
            values[_OBS, sel] += m
        return values


def evaluate_grid(plan: Plan, theta: float, cost: Optional[CostModel] = None) -> PartialProfile:
    return GridEvaluator().evaluate(plan, theta, cost)


registry.register(GridEvaluator.name, GridEvaluator)
