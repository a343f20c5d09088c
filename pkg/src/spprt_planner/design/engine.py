"""
Backward-induction design of the optimal truncated sequentially planned test.

Starting from rho_0 = g, every level j builds

    rho_j(z) = min{ g(z), min_m [ c(m)(1 + gamma(z - 1)) + I_m rho_{j-1}(z) ] }

on its continuation interval (where the inner minimum beats g) and stores it
as an Envelope. Levels are indexed by allowance: the number of further groups
the plan may still take.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..types.errors import DomainError, NumericalError
from ..types.model import DesignConfig, Hypotheses
from .envelope import Envelope, build_log_grid, make_envelope, stop_risk_array
from .lr_model import OutcomeKernel, group_distribution

logger = logging.getLogger(__name__)

# Consecutive failing scan points that end the outward scan on one side
_FAILS_TO_STOP = 3
_SCAN_BATCH = 8
# Log-space half width within which z counts as exactly z*
TIE_TOL = 1e-10
# Decimal places of log z used as rule-cache key
_RULE_KEY_DIGITS = 12


@lru_cache(maxsize=32)
def _kernel_for(hyp: Hypotheses, sizes: Tuple[int, ...], theta: float) -> OutcomeKernel:
    return OutcomeKernel(hyp, sizes, theta)


def design_kernel(config: DesignConfig) -> OutcomeKernel:
    """Outcome kernel under theta0, the measure of the operator I_m."""
    return _kernel_for(config.hyp, config.group_sizes, config.hyp.theta0)


def weighted_cost_factor(gamma: float, z: float) -> float:
    """Factor 1 + gamma (z - 1) mixing the H0 and H1 sampling costs."""
    return 1.0 + gamma * (z - 1.0)


def apply_cost_operator(env: Envelope, m: int, z: float, hyp: Hypotheses) -> float:
    """I_m U(z) = E_0 U(z * Z_m) for the stored envelope U."""
    if not z > 0:
        raise DomainError(f"Likelihood ratio must be positive, got {z}")
    dist = group_distribution(hyp, int(m), hyp.theta0)
    with np.errstate(over="ignore"):
        return float(np.dot(dist.probs, env.evaluate(z * dist.lr)))


def continuation_values(
    config: DesignConfig,
    prev_env: Envelope,
    log_z,
    kernel: Optional[OutcomeKernel] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised continuation cost C(z) and its minimising group size.

    Ties go to the smallest group size (np.argmin keeps the first minimum and
    group sizes are sorted).
    """
    kernel = kernel or design_kernel(config)
    log_z = np.atleast_1d(np.asarray(log_z, dtype=float))
    with np.errstate(over="ignore"):
        z = np.exp(log_z)
    factor = 1.0 + config.gamma * (z - 1.0)
    totals = config.costs[None, :] * factor[:, None] + kernel.expect(prev_env.evaluate, log_z)
    best = np.argmin(totals, axis=1)
    values = totals[np.arange(log_z.size), best]
    return values, np.asarray(config.group_sizes)[best]


def continuation_value(config: DesignConfig, prev_env: Envelope, z: float) -> Tuple[float, int]:
    """Scalar form of continuation_values: (min value, argmin group size)."""
    if not z > 0:
        raise DomainError(f"Likelihood ratio must be positive, got {z}")
    values, sizes = continuation_values(config, prev_env, [math.log(z)])
    return float(values[0]), int(sizes[0])


def _stop_margin(config, prev_env, kernel, log_z) -> np.ndarray:
    """g(z) - C(z); positive exactly where continuing is cheaper than stopping."""
    values, _ = continuation_values(config, prev_env, log_z, kernel)
    with np.errstate(over="ignore"):
        z = np.exp(np.atleast_1d(log_z))
    return stop_risk_array(config.params, z) - values


def _scan_side(config, prev_env, kernel, center: float, direction: int) -> List[Tuple[float, bool]]:
    """Step outward from center until three consecutive scan points fail."""
    h, cap = config.h, config.bracket_cap
    scanned: List[Tuple[float, bool]] = []
    fails = 0
    k = 1
    while True:
        xs = center + direction * h * np.arange(k, k + _SCAN_BATCH)
        within = np.abs(xs) <= cap
        margins = np.full(xs.shape, np.nan)
        if within.any():
            margins[within] = _stop_margin(config, prev_env, kernel, xs[within])
        for x, ok, margin in zip(xs, within, margins):
            if not ok:
                if scanned and scanned[-1][1]:
                    raise NumericalError("continuation region unbounded within cap")
                return scanned
            positive = bool(margin > 0)
            scanned.append((float(x), positive))
            fails = 0 if positive else fails + 1
            if fails >= _FAILS_TO_STOP:
                return scanned
        k += _SCAN_BATCH


def _bisect(config, prev_env, kernel, inside: float, outside: float) -> float:
    """Shrink [inside, outside] in log z; returns the last point where g > C."""
    while abs(outside - inside) > config.bisect_tol:
        mid = 0.5 * (inside + outside)
        if _stop_margin(config, prev_env, kernel, mid)[0] > 0:
            inside = mid
        else:
            outside = mid
    return inside


def find_continuation_interval(
    config: DesignConfig,
    prev_env: Envelope,
    kernel: Optional[OutcomeKernel] = None
) -> Optional[Tuple[float, float]]:
    """
    Maximal interval on which g(z) > C(z), or None when there is none.

    The scan starts at z* = lambda0 / lambda1, walks both ways on a log grid of
    step h and refines the extreme sign changes by bisection in log z.
    """
    kernel = kernel or design_kernel(config)
    center = config.params.log_z_star
    center_positive = bool(_stop_margin(config, prev_env, kernel, center)[0] > 0)

    scanned = [(center, center_positive)]
    scanned += _scan_side(config, prev_env, kernel, center, -1)
    scanned += _scan_side(config, prev_env, kernel, center, +1)
    positives = [x for x, positive in scanned if positive]
    if not positives:
        return None

    h = config.h
    left_in, right_in = min(positives), max(positives)
    left_out, right_out = left_in - h, right_in + h
    lo = _bisect(config, prev_env, kernel, left_in, left_out)
    hi = _bisect(config, prev_env, kernel, right_in, right_out)
    if not lo < hi:
        lo, hi = 0.5 * (lo + left_out), 0.5 * (hi + right_out)
    return math.exp(lo), math.exp(hi)


@dataclass(frozen=True, eq=False)
class Plan:
    """
    Frozen output of the design.

    ``envelopes[j]`` is rho_j for allowance j = 0..k_eff-1 (entry 0 is g itself),
    and the continuation interval at allowance j is ``envelopes[j].interval``.
    """
    config: DesignConfig
    k_eff: int
    envelopes: Tuple[Envelope, ...]
    m1: int
    early_exit_level: Optional[int] = None
    _rule_cache: Dict[int, Dict[float, int]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self):
        if self.k_eff < 1 or len(self.envelopes) != self.k_eff:
            raise DomainError("Plan needs exactly one envelope per allowance 0..k_eff-1")
        if self.m1 not in self.config.group_sizes:
            raise DomainError(f"First group size {self.m1} is not an eligible size")
        for j in range(1, self.k_eff):
            if self.envelopes[j].interval is None:
                raise DomainError(f"Missing continuation interval at allowance {j}")

    @property
    def z_star(self) -> float:
        return self.config.params.z_star

    @property
    def early_exit(self) -> bool:
        return self.early_exit_level is not None

    @property
    def intervals(self) -> Dict[int, Optional[Tuple[float, float]]]:
        """Continuation interval per allowance 1..k_eff-1."""
        return {j: self.envelopes[j].interval for j in range(1, self.k_eff)}

    @cached_property
    def kernel(self) -> OutcomeKernel:
        return design_kernel(self.config)

    def _check_allowance(self, allowance: int) -> None:
        if not (0 <= allowance <= self.k_eff - 1):
            raise DomainError(
                f"Allowance must lie in [0, {self.k_eff - 1}], got {allowance}"
            )

    def actions(self, allowance: int, log_z) -> np.ndarray:
        """
        Group size prescribed at each log z with ``allowance`` groups left
        (0 means stop). Results are cached per allowance.
        """
        self._check_allowance(allowance)
        log_z = np.atleast_1d(np.asarray(log_z, dtype=float))
        out = np.zeros(log_z.shape, dtype=int)
        if allowance == 0:
            return out

        env = self.envelopes[allowance]
        a, b = env.interval
        with np.errstate(over="ignore"):
            z = np.exp(log_z)
        inside = (z >= a) & (z <= b)
        if not inside.any():
            return out

        keys, inverse = np.unique(np.round(log_z[inside], _RULE_KEY_DIGITS), return_inverse=True)
        cache = self._rule_cache.setdefault(allowance, {})
        missing = [float(k) for k in keys if float(k) not in cache]
        if missing:
            _, sizes = continuation_values(
                self.config, self.envelopes[allowance - 1], np.array(missing), self.kernel
            )
            cache.update(zip(missing, (int(m) for m in sizes)))
        chosen = np.array([cache[float(k)] for k in keys], dtype=int)
        out[inside] = chosen[inverse.ravel()]
        return out

    def accepts_h1(self, log_z) -> np.ndarray:
        """Decision on log z with ties at z* (within TIE_TOL) going to H1."""
        log_z = np.asarray(log_z, dtype=float)
        return log_z >= self.config.params.log_z_star - TIE_TOL

    def is_tie(self, log_z) -> np.ndarray:
        return np.abs(np.asarray(log_z, dtype=float) - self.config.params.log_z_star) <= TIE_TOL


def sampling_rule(plan: Plan, allowance: int, z: float) -> int:
    """Next group size at likelihood ratio z with ``allowance`` groups left, 0 to stop."""
    if not z > 0:
        raise DomainError(f"Likelihood ratio must be positive, got {z}")
    return int(plan.actions(allowance, [math.log(z)])[0])


def decide(plan: Plan, z: float) -> int:
    """1 (accept H1) iff lambda0 <= lambda1 * z, else 0."""
    if z < 0:
        raise DomainError(f"Likelihood ratio must be nonnegative, got {z}")
    params = plan.config.params
    return 1 if params.lambda0 <= params.lambda1 * z else 0


def first_group_size(config: DesignConfig, env: Envelope, kernel: Optional[OutcomeKernel] = None) -> int:
    """argmin_m { c(m) + I_m env(1) }."""
    kernel = kernel or design_kernel(config)
    totals = config.costs + kernel.expect(env.evaluate, [0.0])[0]
    return int(config.group_sizes[int(np.argmin(totals))])


def _late_exit_depth(config: DesignConfig, env: Envelope) -> float:
    """How much continuing was worth at the last level that still had an interval."""
    return float(np.max(stop_risk_array(config.params, env.nodes) - env.values))


def niod(config: DesignConfig) -> Plan:
    """Build the plan level by level, demoting the horizon on Early Exit."""
    kernel = design_kernel(config)
    params = config.params
    envelopes: List[Envelope] = [Envelope.stop_risk_only(params)]
    k_eff = config.K
    early_exit_level: Optional[int] = None

    for n in range(1, config.K):
        prev = envelopes[-1]
        interval = find_continuation_interval(config, prev, kernel)
        if interval is None:
            if n > 1:
                depth = _late_exit_depth(config, prev)
                if depth >= 10 * config.h * params.lambda0:
                    raise NumericalError(
                        f"Early Exit at level {n} after a continuation worth {depth:.6g}"
                    )
                logger.warning(f"Early Exit at level {n} (previous depth {depth:.3g})")
            else:
                logger.info("Early Exit at level 1: only one-stage plans qualify")
            k_eff = n
            early_exit_level = n
            break

        a, b = interval
        nodes = build_log_grid(a, b, config.h)
        values, _ = continuation_values(config, prev, np.log(nodes), kernel)
        values = np.minimum(values, stop_risk_array(params, nodes))
        values = np.minimum(values, prev.evaluate(nodes))
        envelopes.append(make_envelope(params, interval, nodes, values, config.h))
        logger.debug(f"Level {n}: interval [{a:.6g}, {b:.6g}] on {nodes.size} nodes")

    m1 = first_group_size(config, envelopes[k_eff - 1], kernel)
    logger.info(f"Design finished: K_eff={k_eff}, m1={m1}")
    return Plan(
        config=config,
        k_eff=k_eff,
        envelopes=tuple(envelopes),
        m1=m1,
        early_exit_level=early_exit_level,
    )


def interval_table(plan: Plan) -> List[Dict[str, float]]:
    """One row per allowance with the matching stage index (groups already taken)."""
    rows = []
    for j in range(plan.k_eff - 1, 0, -1):
        a, b = plan.envelopes[j].interval
        rows.append({
            "allowance": j,
            "stage": plan.k_eff - j,
            "a": a,
            "b": b,
            "log_a": math.log(a),
            "log_b": math.log(b),
        })
    return rows


def endpoint_drift(plan: Plan) -> List[Dict[str, float]]:
    """Relative change of the interval endpoints from allowance j-1 to j."""
    rows = []
    for j in range(2, plan.k_eff):
        a_prev, b_prev = plan.envelopes[j - 1].interval
        a, b = plan.envelopes[j].interval
        rows.append({
            "allowance": j,
            "rel_change_a": abs(a - a_prev) / a_prev,
            "rel_change_b": abs(b - b_prev) / b_prev,
        })
    return rows


def outermost_rule(plan: Plan) -> List[Tuple[float, int]]:
    """Sampling rule of the largest allowance sampled on its grid nodes."""
    if plan.k_eff < 2:
        return []
    j = plan.k_eff - 1
    nodes = plan.envelopes[j].nodes
    sizes = plan.actions(j, np.log(nodes))
    return [(float(z), int(m)) for z, m in zip(nodes, sizes)]
