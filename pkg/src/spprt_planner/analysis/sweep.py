"""
Efficiency sweep over a grid of multipliers.

Each (lambda0, lambda1) on a square log grid gets its own optimal plan and
exact profile; the fixed-sample comparator is sized for that plan's achieved
error probabilities (or for fixed targets when given), and R0, R1 are
reported raw with no surface fitting.
"""

import logging
import math
from dataclasses import asdict, dataclass
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.parallel import ordered_map
from ..design.engine import niod
from ..evaluators.oc import profile_plan
from ..types.errors import DomainError, PlannerError
from ..types.model import DesignConfig
from .fss import fss_cost, np_min_sample_size

logger = logging.getLogger(__name__)


@dataclass
class SweepSettings:
    log_lambda_min: float = 3.0
    log_lambda_max: float = 6.3
    points: int = 9
    alpha: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.points < 1:
            raise DomainError("Sweep needs at least one point per axis")
        if self.points > 1 and not self.log_lambda_max > self.log_lambda_min:
            raise DomainError("logLambdaMax must exceed logLambdaMin")
        if (self.alpha is None) != (self.beta is None):
            raise DomainError("Sweep targets need both alpha and beta, or neither")

    def shifted(self, cost_scale: float) -> "SweepSettings":
        """Same grid for costs expressed in units ``cost_scale`` times smaller."""
        shift = math.log(cost_scale)
        return SweepSettings(
            self.log_lambda_min + shift, self.log_lambda_max + shift,
            self.points, self.alpha, self.beta,
        )

    def axis(self) -> np.ndarray:
        return np.linspace(self.log_lambda_min, self.log_lambda_max, self.points)


@dataclass
class SweepRow:
    log_lambda0: float
    log_lambda1: float
    lambda0: float
    lambda1: float
    alpha: float = math.nan
    beta: float = math.nan
    asc0: float = math.nan
    asc1: float = math.nan
    fss_n: Optional[int] = None
    asc_fss: float = math.nan
    r0: float = math.nan
    r1: float = math.nan
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


SWEEP_COLUMNS = [
    "log_lambda0", "log_lambda1", "lambda0", "lambda1", "alpha", "beta",
    "asc0", "asc1", "fss_n", "asc_fss", "r0", "r1", "error",
]


def _sweep_point(base: DesignConfig, settings: SweepSettings, logs: Tuple[float, float]) -> SweepRow:
    log0, log1 = logs
    row = SweepRow(log0, log1, math.exp(log0), math.exp(log1))
    try:
        plan = niod(base.with_lambdas(row.lambda0, row.lambda1))
        profile, _ = profile_plan(plan, "exact")
        row.alpha, row.beta = profile.alpha, profile.beta
        row.asc0, row.asc1 = profile.asc0, profile.asc1
        alpha = settings.alpha if settings.alpha is not None else profile.alpha
        beta = settings.beta if settings.beta is not None else profile.beta
        row.fss_n = np_min_sample_size(base.hyp, alpha, beta).n
        row.asc_fss = fss_cost(row.fss_n, base.cost)
        row.r0 = row.asc_fss / profile.asc0
        row.r1 = row.asc_fss / profile.asc1
    except PlannerError as e:
        row.error = str(e)
    return row


def lambda_sweep(base: DesignConfig, settings: SweepSettings, workers: Optional[int] = 1) -> List[SweepRow]:
    """Rows in lambda0-major order, identical for any worker count."""
    axis = settings.axis()
    grid = [(float(l0), float(l1)) for l0 in axis for l1 in axis]
    logger.info(f"Sweeping {len(grid)} multiplier pairs")
    rows = ordered_map(partial(_sweep_point, base, settings), grid, workers)
    failed = sum(1 for row in rows if row.error)
    if failed:
        logger.warning(f"{failed} sweep point(s) could not be evaluated")
    return rows


def efficiency_extremes(rows: List[SweepRow]) -> Dict[str, Any]:
    """Largest and smallest R0 over the sweep with the errors where they occur."""
    valid = [row for row in rows if row.error is None and not math.isnan(row.r0)]
    if not valid:
        return {}
    top = max(valid, key=lambda row: row.r0)
    bottom = min(valid, key=lambda row: row.r0)
    return {
        "max_r0": {"r0": top.r0, "alpha": top.alpha, "beta": top.beta},
        "min_r0": {"r0": bottom.r0, "alpha": bottom.alpha, "beta": bottom.beta},
    }
