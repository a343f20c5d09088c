"""Multiplier calibration, fixed-sample comparisons and efficiency sweeps."""

from .calibration import (
    CalibrationResult,
    CalibrationSpec,
    Calibrator,
    calibrate,
    calibration_objective,
    lambda_trend_check,
)
from .fss import FixedSampleTest, np_min_sample_size, reference_results, relative_efficiency
from .sweep import SweepSettings, efficiency_extremes, lambda_sweep

__all__ = [
    "CalibrationResult",
    "CalibrationSpec",
    "Calibrator",
    "calibrate",
    "calibration_objective",
    "lambda_trend_check",
    "FixedSampleTest",
    "np_min_sample_size",
    "reference_results",
    "relative_efficiency",
    "SweepSettings",
    "efficiency_extremes",
    "lambda_sweep",
]
