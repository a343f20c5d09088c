"""
Problem statement types: hypotheses, stop-risk weights, cost model and the
full design configuration.

All of them are frozen dataclasses validated on construction, so a value that
exists is a value that can be designed with.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, Tuple

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Hypotheses:
    """Simple Bernoulli hypotheses H0: theta = theta0 against H1: theta = theta1."""
    theta0: float
    theta1: float

    def __post_init__(self):
        for name in ("theta0", "theta1"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise DomainError(f"{name} must lie strictly between 0 and 1, got {value}")
        if self.theta0 == self.theta1:
            raise DomainError("theta0 and theta1 must be distinct")

    @property
    def r(self) -> float:
        """Likelihood-ratio factor contributed by one success."""
        return self.theta1 / self.theta0

    @property
    def q(self) -> float:
        """Likelihood-ratio factor contributed by one failure."""
        return (1.0 - self.theta1) / (1.0 - self.theta0)

    @property
    def log_r(self) -> float:
        return math.log(self.theta1) - math.log(self.theta0)

    @property
    def log_q(self) -> float:
        return math.log1p(-self.theta1) - math.log1p(-self.theta0)

    @property
    def increasing(self) -> bool:
        """True when the likelihood ratio grows with the success count."""
        return self.theta1 > self.theta0

    def log_lr(self, n, s):
        """Log likelihood ratio of s successes among n observations (array friendly)."""
        return s * self.log_r + (n - s) * self.log_q


@dataclass(frozen=True)
class StopRiskParams:
    """Lagrange multipliers weighting type-I (lambda0) and type-II (lambda1) errors."""
    lambda0: float
    lambda1: float

    def __post_init__(self):
        for name in ("lambda0", "lambda1"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be positive and finite, got {value}")

    @property
    def z_star(self) -> float:
        """Decision threshold on the likelihood ratio."""
        return self.lambda0 / self.lambda1

    @property
    def log_z_star(self) -> float:
        return math.log(self.lambda0) - math.log(self.lambda1)


@dataclass(frozen=True)
class CostModel:
    """
    Cost c(m) of one group of m observations.

    ``affine`` gives c(m) = c0 + cu * m; ``table`` looks c(m) up in an explicit
    map. Positivity and strict monotonicity over the eligible sizes are checked
    by DesignConfig; evaluation-only models (c = 1, c = m) are built with
    ``constant`` and ``per_observation``.
    """
    kind: str = "affine"
    c0: float = 0.0
    cu: float = 1.0
    table: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("affine", "table"):
            raise DomainError(f"Unknown cost kind: {self.kind}")
        if self.kind == "affine":
            if self.c0 < 0 or self.cu < 0:
                raise DomainError("Affine cost coefficients must be nonnegative")
        elif not self.table:
            raise DomainError("Table cost requires at least one entry")

    @classmethod
    def affine(cls, c0: float, cu: float) -> "CostModel":
        return cls(kind="affine", c0=float(c0), cu=float(cu))

    @classmethod
    def from_table(cls, entries: Dict[int, float]) -> "CostModel":
        items = tuple(sorted((int(m), float(c)) for m, c in entries.items()))
        return cls(kind="table", table=items)

    @classmethod
    def constant(cls) -> "CostModel":
        """c(m) = 1: the expected cost becomes the expected number of groups."""
        return cls.affine(1.0, 0.0)

    @classmethod
    def per_observation(cls) -> "CostModel":
        """c(m) = m: the expected cost becomes the expected number of observations."""
        return cls.affine(0.0, 1.0)

    def cost(self, m: int) -> float:
        if self.kind == "affine":
            return self.c0 + self.cu * m
        lookup = dict(self.table)
        if m not in lookup:
            raise DomainError(f"No cost defined for group size {m}")
        return lookup[m]

    def costs(self, sizes: Iterable[int]) -> np.ndarray:
        return np.array([self.cost(int(m)) for m in sizes], dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "affine":
            return {"c0": self.c0, "cu": self.cu}
        return {"table": {str(m): c for m, c in self.table}}


@dataclass(frozen=True)
class DesignConfig:
    """Full statement of one design problem."""
    hyp: Hypotheses
    group_sizes: Tuple[int, ...]
    cost: CostModel
    gamma: float
    params: StopRiskParams
    K: int
    h: float
    bisect_tol: float = 1e-9
    bracket_cap: float = 200.0
    _costs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.group_sizes)
        if not sizes:
            raise DomainError("The set of eligible group sizes must be nonempty")
        if any(m < 1 for m in sizes):
            raise DomainError("Group sizes must be positive integers")
        if len(set(sizes)) != len(sizes) or list(sizes) != sorted(sizes):
            raise DomainError("Group sizes must be sorted and distinct")
        object.__setattr__(self, "group_sizes", sizes)

        if not (0.0 <= self.gamma <= 1.0):
            raise DomainError(f"gamma must lie in [0, 1], got {self.gamma}")
        if int(self.K) != self.K or self.K < 1:
            raise DomainError(f"K must be an integer >= 1, got {self.K}")
        if not self.h > 0:
            raise DomainError(f"Grid step must be positive, got {self.h}")
        if not self.bisect_tol > 0 or not self.bracket_cap > 0:
            raise DomainError("Tolerances must be positive")

        costs = self.cost.costs(sizes)
        if np.any(costs <= 0):
            raise DomainError("Group costs must be positive on every eligible size")
        if np.any(np.diff(costs) <= 0):
            raise DomainError("Group costs must be strictly increasing in the group size")
        costs.setflags(write=False)
        object.__setattr__(self, "_costs", costs)

    @property
    def costs(self) -> np.ndarray:
        """c(m) for every m in group_sizes, in the same order."""
        return self._costs

    def with_lambdas(self, lambda0: float, lambda1: float) -> "DesignConfig":
        return replace(self, params=StopRiskParams(lambda0, lambda1))

    def to_dict(self, lambdas: bool = True) -> Dict[str, Any]:
        """Echo in the configuration document vocabulary."""
        data: Dict[str, Any] = {
            "theta0": self.hyp.theta0,
            "theta1": self.hyp.theta1,
            "groupSizes": list(self.group_sizes),
            "cost": self.cost.to_dict(),
            "gamma": self.gamma,
            "K": self.K,
            "gridStep": self.h,
            "tolerances": {"bisectTol": self.bisect_tol, "bracketCap": self.bracket_cap},
        }
        if lambdas:
            data["lambda0"] = self.params.lambda0
            data["lambda1"] = self.params.lambda1
        return data
