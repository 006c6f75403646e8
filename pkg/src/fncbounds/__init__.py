"""Confidence bounds for the fraction nonconforming of normal populations.

Bounds on the fraction of measurements beyond a lower or upper quality
specification limit, from the mean and sd of a control sample, via
inversion of the noncentral t distribution in its noncentrality.
"""

from .bounds import (
    BoundsReport,
    QualitySpec,
    SampleSummary,
    TailBounds,
    bounds_report,
    expected_fraction_lower,
    lower_tail_bounds,
    make_quality_spec,
    solve_delta_hat,
    upper_tail_bounds,
)
from .errors import ConvergenceError, DomainError
from .special import NctParams, log_gamma, nct_cdf, nct_sf, norm_cdf, norm_pdf, norm_quantile

__all__ = [
    "BoundsReport",
    "ConvergenceError",
    "DomainError",
    "NctParams",
    "QualitySpec",
    "SampleSummary",
    "TailBounds",
    "bounds_report",
    "expected_fraction_lower",
    "log_gamma",
    "lower_tail_bounds",
    "make_quality_spec",
    "nct_cdf",
    "nct_sf",
    "norm_cdf",
    "norm_pdf",
    "norm_quantile",
    "solve_delta_hat",
    "upper_tail_bounds",
]
