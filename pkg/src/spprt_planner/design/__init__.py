"""Likelihood model, value-function envelopes and the backward-induction design."""

from .engine import (
    Plan,
    apply_cost_operator,
    continuation_value,
    continuation_values,
    decide,
    endpoint_drift,
    find_continuation_interval,
    first_group_size,
    interval_table,
    niod,
    outermost_rule,
    sampling_rule,
    weighted_cost_factor,
)
from .advice import Advice, advise, next_action, parse_history
from .envelope import Envelope, build_log_grid, evaluate, make_envelope, stop_risk
from .lr_model import GroupOutcomeDistribution, OutcomeKernel, group_distribution, lr_factor

__all__ = [
    "Advice",
    "advise",
    "next_action",
    "parse_history",
    "Plan",
    "apply_cost_operator",
    "continuation_value",
    "continuation_values",
    "decide",
    "endpoint_drift",
    "find_continuation_interval",
    "first_group_size",
    "interval_table",
    "niod",
    "outermost_rule",
    "sampling_rule",
    "weighted_cost_factor",
    "Envelope",
    "build_log_grid",
    "evaluate",
    "make_envelope",
    "stop_risk",
    "GroupOutcomeDistribution",
    "OutcomeKernel",
    "group_distribution",
    "lr_factor",
]
