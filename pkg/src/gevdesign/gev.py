"""GEV distribution mathematics.

Location/scale/shape follow the block-maxima convention of Coles (2001):

    F(x) = exp(-t(x)),  t(x) = (1 + xi*(x - mu)/sigma)^(-1/xi)   (xi != 0)
                        t(x) = exp(-(x - mu)/sigma)              (xi = 0)

``|xi| < 1e-8`` is evaluated on the Gumbel branch to avoid cancellation;
both branches share the continuous form L = log1p(xi*z)/xi, so evaluation
is smooth across the threshold. Out-of-support log-densities return -inf
(a sentinel, not an error) so optimizer line searches can retreat.

Sampling is inverse-transform from numpy's PCG64 generator; a fixed seed
gives a fixed sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gevdesign._core import kernels as _k
from gevdesign.errors import DataError, ParameterError, SupportError

__all__ = [
    "GevParams",
    "gev_cdf",
    "gev_logcdf",
    "gev_logpdf",
    "gev_quantile",
    "gev_loglik",
    "gev_loglik_grad",
    "gev_sample",
    "gev_support",
]


@dataclass(frozen=True)
class GevParams:
    """Location (m), scale (m, > 0) and shape (dimensionless) of one GEV law."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma) and np.isfinite(self.xi)):
            raise ParameterError(f"non-finite GEV parameters: {self}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")


def gev_support(p: GevParams) -> tuple[float, float]:
    """(lower, upper) support bounds; infinite where unbounded."""
    if p.xi > 0:
        return p.mu - p.sigma / p.xi, np.inf
    if p.xi < 0:
        return -np.inf, p.mu - p.sigma / p.xi
    return -np.inf, np.inf


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    return np.ascontiguousarray(np.atleast_1d(arr)), scalar


def _run(kernel, x, p: GevParams):
    arr, scalar = _as_array(x)
    mu = np.full_like(arr, p.mu)
    sigma = np.full_like(arr, p.sigma)
    out = np.empty_like(arr)
    kernel(arr, mu, sigma, p.xi, out)
    return float(out[0]) if scalar else out


def gev_cdf(x, p: GevParams):
    """P(X <= x); 0 below the lower support bound, 1 above the upper."""
    return _run(_k.cdf, x, p)


def gev_logcdf(x, p: GevParams):
    """log P(X <= x); -inf below the lower support bound (xi > 0)."""
    return _run(_k.logcdf, x, p)


def gev_logpdf(x, p: GevParams):
    """Log-density; -inf outside the support."""
    return _run(_k.logpdf, x, p)


def gev_quantile(prob, p: GevParams):
    """Inverse CDF for prob strictly inside (0, 1)."""
    arr, scalar = _as_array(prob)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ParameterError("probability must lie strictly inside (0, 1)")
    mu = np.full_like(arr, p.mu)
    sigma = np.full_like(arr, p.sigma)
    out = np.empty_like(arr)
    _k.quantile(arr, mu, sigma, p.xi, out)
    return float(out[0]) if scalar else out


def _sample_arrays(sample) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(sample, dtype=np.float64).ravel())
    if arr.size == 0:
        raise DataError("empty sample")
    if np.any(~np.isfinite(arr)):
        raise DataError("sample contains non-finite values")
    return arr


def gev_loglik(p: GevParams, sample) -> float:
    """Sum of log-densities over the sample; -inf if any point is out of support."""
    arr = _sample_arrays(sample)
    mu = np.full_like(arr, p.mu)
    sigma = np.full_like(arr, p.sigma)
    return _k.loglik(arr, mu, sigma, p.xi)


def gev_loglik_grad(p: GevParams, sample) -> np.ndarray:
    """Analytic gradient of gev_loglik over the working coordinates (mu, log sigma, xi).

    All sample points must lie strictly inside the support.
    """
    arr = _sample_arrays(sample)
    mu = np.full_like(arr, p.mu)
    sigma = np.full_like(arr, p.sigma)
    dmu = np.empty_like(arr)
    dls = np.empty_like(arr)
    ll, dxi = _k.loglik_grad(arr, mu, sigma, p.xi, dmu, dls)
    if not np.isfinite(ll):
        raise SupportError("gradient undefined: sample point on or outside support boundary")
    return np.array([dmu.sum(), dls.sum(), dxi])


def gev_sample(p: GevParams, n: int, seed: int) -> np.ndarray:
    """Draw n values by inverse-transform sampling (PCG64, deterministic per seed)."""
    if n < 1:
        raise DataError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    # random() can return exactly 0; keep probabilities inside (0, 1)
    np.clip(u, 1e-300, 1.0 - 1e-16, out=u)
    return gev_quantile(u, p)


def sample_from_uniforms(u: np.ndarray, mu: np.ndarray, sigma: np.ndarray, xi: float) -> np.ndarray:
    """Inverse-transform per-record draws for arrays of (mu, sigma) and shared xi."""
    u = np.clip(np.ascontiguousarray(u, dtype=np.float64), 1e-300, 1.0 - 1e-16)
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    sigma = np.ascontiguousarray(sigma, dtype=np.float64)
    out = np.empty_like(u)
    _k.quantile(u, mu, sigma, xi, out)
    return out
