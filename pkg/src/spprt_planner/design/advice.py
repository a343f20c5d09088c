"""
Interim advice: replay an observed history against a plan and say what to do next.
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..types.errors import DomainError, HistoryMismatchError
from .engine import Plan


@dataclass
class Advice:
    groups_taken: int
    allowance: int
    n: int
    s: int
    log_z: float
    next_group_size: Optional[int] = None
    decision: Optional[int] = None

    @property
    def z(self) -> float:
        return math.exp(self.log_z)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["z"] = self.z
        if self.decision is not None:
            data["verdict"] = "accept H1" if self.decision == 1 else "accept H0"
        return data


def parse_history(text: str) -> List[Tuple[int, int]]:
    """Parse "m:s,m:s,..." into (group size, successes) pairs; empty text is an empty history."""
    history = []
    for step, item in enumerate(filter(None, (part.strip() for part in text.split(","))), start=1):
        try:
            m, s = (int(v) for v in item.split(":"))
        except ValueError:
            raise DomainError(f"History step {step} must look like 'size:successes', got '{item}'")
        history.append((m, s))
    return history


def next_action(plan: Plan, groups_taken: int, n: int, s: int) -> int:
    """Group size the plan prescribes after ``groups_taken`` groups, 0 to stop."""
    if groups_taken == 0:
        return plan.m1
    allowance = plan.k_eff - groups_taken
    if allowance <= 0:
        return 0
    return int(plan.actions(allowance, [plan.config.hyp.log_lr(n, s)])[0])


def advise(plan: Plan, history: Sequence[Tuple[int, int]]) -> Advice:
    """
    Validate the history step by step against the plan's own prescriptions and
    return the next group size or the final decision.
    """
    n = s = 0
    for step, (m, successes) in enumerate(history, start=1):
        expected = next_action(plan, step - 1, n, s)
        if expected == 0:
            raise HistoryMismatchError(
                f"Step {step}: the plan had already stopped, no further group was due", step
            )
        if m != expected:
            raise HistoryMismatchError(
                f"Step {step}: group size {m} differs from the prescribed {expected}", step
            )
        if not (0 <= successes <= m):
            raise DomainError(f"Step {step}: successes must lie in [0, {m}], got {successes}")
        n += m
        s += successes

    taken = len(history)
    log_z = float(plan.config.hyp.log_lr(n, s))
    advice = Advice(
        groups_taken=taken,
        allowance=plan.k_eff - taken,
        n=n,
        s=s,
        log_z=log_z,
    )
    following = next_action(plan, taken, n, s)
    if following > 0:
        advice.next_group_size = following
    else:
        advice.decision = 1 if bool(plan.accepts_h1(log_z)) else 0
    return advice
