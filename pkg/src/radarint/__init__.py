"""Interference-limited detection range of randomly deployed radars.

Closed-form and quadrature results for a Poisson field of slotted radars,
with a Monte Carlo engine that checks them against the full aggregate
interference.
"""

__version__ = "0.1.0"

from .analytic import (  # noqa: E402
    Fading,
    NoiseParams,
    RadarParams,
    detection_threshold,
    max_range_noise_only,
    max_range_nofading,
    max_range_with_noise,
    pd_floor,
    pd_nofading,
    pd_rayleigh,
    range_at_pd,
    strongest_cdf,
    strongest_logcdf,
    threshold_with_noise,
)
from .antenna import Cone, PlanarArray  # noqa: E402
from .errors import DomainError, NumericalError, ResourceError, ValidationError  # noqa: E402

__all__ = [
    "Cone",
    "DomainError",
    "Fading",
    "NoiseParams",
    "NumericalError",
    "PlanarArray",
    "RadarParams",
    "ResourceError",
    "ValidationError",
    "detection_threshold",
    "max_range_noise_only",
    "max_range_nofading",
    "max_range_with_noise",
    "pd_floor",
    "pd_nofading",
    "pd_rayleigh",
    "range_at_pd",
    "strongest_cdf",
    "strongest_logcdf",
    "threshold_with_noise",
]
