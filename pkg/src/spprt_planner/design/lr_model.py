"""
Bernoulli two-hypothesis likelihood model.

A group of m observations with s successes multiplies the running likelihood
ratio by r^s * q^(m-s). Everything here works in log space and exponentiates
only at evaluation points, because a few thousand observations move z across
hundreds of orders of magnitude.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.stats import binom

from ..types.errors import DomainError
from ..types.model import Hypotheses

# Target size of one (points x outcomes) block in OutcomeKernel.expect
_BLOCK_ELEMENTS = 1 << 20


def check_theta(theta: float) -> float:
    """Validate a data-generating success probability."""
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta must lie strictly between 0 and 1, got {theta}")
    return float(theta)


def lr_factor(hyp: Hypotheses, m: int, s: int) -> float:
    """Likelihood-ratio factor r^s * q^(m-s) of one group."""
    if m < 1:
        raise DomainError(f"Group size must be at least 1, got {m}")
    if not (0 <= s <= m):
        raise DomainError(f"Success count must lie in [0, {m}], got {s}")
    return math.exp(hyp.log_lr(m, s))


@dataclass(frozen=True, eq=False)
class GroupOutcomeDistribution:
    """Exact distribution of one group's likelihood-ratio step under theta."""
    m: int
    theta: float
    successes: np.ndarray
    log_lr: np.ndarray
    lr: np.ndarray
    probs: np.ndarray

    @property
    def entries(self) -> List[Tuple[int, float, float]]:
        """Rows (s, lr factor, probability) with s increasing."""
        return [
            (int(s), float(z), float(p))
            for s, z, p in zip(self.successes, self.lr, self.probs)
        ]


@lru_cache(maxsize=8192)
def group_distribution(hyp: Hypotheses, m: int, theta: float) -> GroupOutcomeDistribution:
    """Binomial(m, theta) outcome probabilities paired with their LR factors."""
    if m < 1:
        raise DomainError(f"Group size must be at least 1, got {m}")
    theta = check_theta(theta)
    successes = np.arange(m + 1)
    # logpmf is assembled from log-gamma terms, so m in the hundreds is safe
    probs = np.exp(binom.logpmf(successes, m, theta))
    log_lr = hyp.log_lr(m, successes).astype(float)
    lr = np.exp(log_lr)
    for array in (successes, probs, log_lr, lr):
        array.setflags(write=False)
    return GroupOutcomeDistribution(
        m=int(m), theta=theta, successes=successes, log_lr=log_lr, lr=lr, probs=probs
    )


class OutcomeKernel:
    """
    Outcomes of every eligible group size under one theta, flattened.

    ``expect`` evaluates E[U(z * Z_m)] for a batch of z values and all m at
    once, which is the inner loop of both the design recursion and the grid
    evaluator.
    """

    def __init__(self, hyp: Hypotheses, sizes: Sequence[int], theta: float):
        self.hyp = hyp
        self.theta = check_theta(theta)
        self.sizes = np.asarray(sizes, dtype=int)
        dists = [group_distribution(hyp, int(m), self.theta) for m in self.sizes]
        self.log_lr = np.concatenate([d.log_lr for d in dists])
        self.probs = np.concatenate([d.probs for d in dists])
        lengths = np.array([d.m + 1 for d in dists])
        self.starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))

    @property
    def width(self) -> int:
        return int(self.log_lr.size)

    def expect(self, fn: Callable[[np.ndarray], np.ndarray], log_z) -> np.ndarray:
        """
        Matrix of expectations, one row per log z and one column per group size.

        ``fn`` maps an array of likelihood ratios (not logs) to function values.
        """
        log_z = np.atleast_1d(np.asarray(log_z, dtype=float))
        out = np.empty((log_z.size, self.sizes.size))
        rows = max(1, _BLOCK_ELEMENTS // max(self.width, 1))
        with np.errstate(over="ignore", under="ignore"):
            for start in range(0, log_z.size, rows):
                block = np.exp(log_z[start:start + rows, None] + self.log_lr[None, :])
                values = fn(block) * self.probs
                out[start:start + rows] = np.add.reduceat(values, self.starts, axis=1)
        return out
