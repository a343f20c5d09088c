"""Result types produced by the evaluators."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple


METHODS = ("exact", "grid", "mc")


@dataclass
class PartialProfile:
    """Operating characteristics of a plan under one data-generating theta."""
    theta: float
    p_accept_h0: float
    exp_cost: float
    exp_groups: float
    exp_obs: float
    method: str
    stderr: Optional[Dict[str, float]] = None
    # exact method bookkeeping
    tie_mass: float = 0.0
    mass_error: float = 0.0
    pruned_mass: float = 0.0
    error_bound: float = 0.0

    @property
    def p_accept_h1(self) -> float:
        return 1.0 - self.p_accept_h0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class OCPoint:
    """One point of the operating characteristic curve."""
    theta: float
    p_accept_h0: Optional[float]
    error: Optional[str] = None


@dataclass
class TestProfile:
    """Operating characteristics of a plan under H0 and H1."""
    __test__ = False  # not a pytest collection target

    alpha: float
    beta: float
    asc0: float
    asc1: float
    asc_gamma: float
    exp_groups0: float
    exp_groups1: float
    exp_obs0: float
    exp_obs1: float
    method: str
    oc_points: List[OCPoint] = field(default_factory=list)
    stderr: Optional[Dict[str, float]] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def summary_rows(self) -> List[Tuple[str, float]]:
        """Flat (field, value) pairs in the documented report order."""
        return [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("asc0", self.asc0),
            ("asc1", self.asc1),
            ("asc_gamma", self.asc_gamma),
            ("exp_groups0", self.exp_groups0),
            ("exp_groups1", self.exp_groups1),
            ("exp_obs0", self.exp_obs0),
            ("exp_obs1", self.exp_obs1),
        ]


@dataclass(frozen=True)
class LatticeState:
    """A merged node of the exact forward enumeration."""
    allowance_used: int
    n: int
    s: int
    prob: float
