"""Measures, transforms, correlation models and the memory classifier."""

from .classify import (
    BOUNDARY,
    INCONCLUSIVE,
    LRD,
    SRD,
    MemoryVerdict,
    bk_coefficient,
    classify_subordinated,
    gaussian_levels,
    sigma2_numeric,
    volatility_memory_series,
    worst_verdict,
)
from .covariance import CovarianceModel, rho_power_integral, rho_power_integrals
from .measures import FiniteMeasure
from .transforms import (
    EVEN_COMPOSED,
    MONOTONE_DECREASING,
    MONOTONE_INCREASING,
    OutOfRangeError,
    Transform,
    generalized_inverse,
)

__all__ = [
    "BOUNDARY",
    "INCONCLUSIVE",
    "LRD",
    "SRD",
    "MemoryVerdict",
    "bk_coefficient",
    "classify_subordinated",
    "gaussian_levels",
    "sigma2_numeric",
    "volatility_memory_series",
    "worst_verdict",
    "CovarianceModel",
    "rho_power_integral",
    "rho_power_integrals",
    "FiniteMeasure",
    "EVEN_COMPOSED",
    "MONOTONE_DECREASING",
    "MONOTONE_INCREASING",
    "OutOfRangeError",
    "Transform",
    "generalized_inverse",
]
