"""
Piecewise-linear value functions.

An Envelope stores one value function on its continuation interval as samples
on a log-spaced grid and falls back to the closed-form stop risk
g(z) = min(lambda0, lambda1 * z) everywhere else.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..types.errors import DomainError
from ..types.model import StopRiskParams

# Relative distance under which the right end b counts as already generated
_ENDPOINT_RTOL = 1e-12


def stop_risk(params: StopRiskParams, z: float) -> float:
    """g(z) = min(lambda0, lambda1 * z)."""
    if z < 0:
        raise DomainError(f"Likelihood ratio must be nonnegative, got {z}")
    return min(params.lambda0, params.lambda1 * z)


def stop_risk_array(params: StopRiskParams, z: np.ndarray) -> np.ndarray:
    return np.minimum(params.lambda0, params.lambda1 * z)


def build_log_grid(a: float, b: float, h: float) -> np.ndarray:
    """Nodes a * e^(k h) up to b, with b itself always the last node."""
    if not (0 < a < b):
        raise DomainError(f"Grid interval must satisfy 0 < a < b, got ({a}, {b})")
    if not h > 0:
        raise DomainError(f"Grid step must be positive, got {h}")
    span = math.log(b) - math.log(a)
    count = int(math.floor(span / h + 1e-9))
    nodes = a * np.exp(h * np.arange(count + 1))
    nodes[0] = a
    if nodes.size > 1 and (nodes[-1] >= b or abs(nodes[-1] - b) <= _ENDPOINT_RTOL * b):
        nodes[-1] = b
        return nodes
    return np.append(nodes, b)


@dataclass(frozen=True, eq=False)
class Envelope:
    """One value function: grid samples on [a, b] and g outside."""
    params: StopRiskParams
    interval: Optional[Tuple[float, float]] = None
    nodes: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    h: Optional[float] = None

    def __post_init__(self):
        if self.interval is None:
            return
        a, b = self.interval
        if not (0 < a < b):
            raise DomainError(f"Envelope interval must satisfy 0 < a < b, got {self.interval}")
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.shape != values.shape:
            raise DomainError("Envelope needs matching node and value arrays of length >= 2")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("Envelope nodes must be strictly increasing")
        nodes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def stop_risk_only(cls, params: StopRiskParams) -> "Envelope":
        """The degenerate envelope rho_0 = g."""
        return cls(params=params)

    @property
    def has_interval(self) -> bool:
        return self.interval is not None

    def evaluate(self, z) -> np.ndarray:
        """Vectorised evaluation; linear in z between bracketing nodes. Keeps the shape of z."""
        z = np.asarray(z, dtype=float)
        flat = np.atleast_1d(z)
        out = stop_risk_array(self.params, flat)
        if self.interval is not None:
            a, b = self.interval
            inside = (flat >= a) & (flat <= b)
            if np.any(inside):
                out[inside] = np.interp(flat[inside], self.nodes, self.values)
        return out.reshape(z.shape)

    __call__ = evaluate


def evaluate(env: Envelope, z: float) -> float:
    """Scalar evaluation of an envelope at z > 0."""
    if not z > 0:
        raise DomainError(f"Likelihood ratio must be positive, got {z}")
    return float(env.evaluate(np.array([z]))[0])


def make_envelope(
    params: StopRiskParams,
    interval: Tuple[float, float],
    nodes: Sequence[float],
    values: Sequence[float],
    h: Optional[float] = None
) -> Envelope:
    return Envelope(
        params=params,
        interval=(float(interval[0]), float(interval[1])),
        nodes=np.asarray(nodes, dtype=float),
        values=np.asarray(values, dtype=float),
        h=h,
    )
