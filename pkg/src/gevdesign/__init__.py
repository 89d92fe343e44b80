"""gevdesign: extreme sea-state statistics from block maxima.

Fits stationary, seasonal and month-by-year tensor-spline GEV models to
block maxima of a scalar environmental series (significant wave height),
applies per-month CDF-t bias correction, and computes monthly extreme
quantiles, annual return levels and lifetime-equivalent design levels
with parametric-bootstrap uncertainty.
"""

from gevdesign._core import BACKEND
from gevdesign.gev import (
    GevParams,
    gev_cdf,
    gev_logcdf,
    gev_logpdf,
    gev_loglik,
    gev_loglik_grad,
    gev_quantile,
    gev_sample,
    gev_support,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GevParams",
    "gev_cdf",
    "gev_logcdf",
    "gev_logpdf",
    "gev_loglik",
    "gev_loglik_grad",
    "gev_quantile",
    "gev_sample",
    "gev_support",
    "__version__",
]
