"""Rates of escape, asymptotic entropy and the checks that relate them."""

from ..measures import conditional_entropy
from .checks import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    PROXY,
    AnnulusBound,
    Cell,
    CheckResult,
    DecompositionReport,
    absolute_bound_check,
    decomposition_checks,
    decomposition_defaults,
    entropy_decomposition,
    fundamental_inequality_check,
    green_speed_le_entropy_check,
    overlap_check,
    value_sigma,
)
from .estimators import (
    GreenMetric,
    LimitEstimate,
    WordMetric,
    entropy_estimate_convolution,
    entropy_estimate_pointwise,
    speed_estimate,
)
from .extrapolate import extrapolate_entropy, limit_weights
from .report import SpeedEntropyReport, speed_entropy_report

__all__ = [
    "AnnulusBound",
    "Cell",
    "CheckResult",
    "DecompositionReport",
    "FAIL",
    "GreenMetric",
    "INCONCLUSIVE",
    "LimitEstimate",
    "PASS",
    "PROXY",
    "SpeedEntropyReport",
    "WordMetric",
    "absolute_bound_check",
    "conditional_entropy",
    "decomposition_checks",
    "decomposition_defaults",
    "entropy_decomposition",
    "entropy_estimate_convolution",
    "entropy_estimate_pointwise",
    "extrapolate_entropy",
    "fundamental_inequality_check",
    "green_speed_le_entropy_check",
    "limit_weights",
    "overlap_check",
    "speed_entropy_report",
    "speed_estimate",
    "value_sigma",
]
