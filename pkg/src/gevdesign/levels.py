"""Return levels and design levels from fitted models.

The annual-maximum CDF of a monthly model is the product of the twelve
monthly CDFs; the lifetime-maximum CDF multiplies over the years of the
structure's service life as well. All products are computed as sums of
log-CDFs (360-term products underflow), and inversions use a bracketed
root finder whose initial bracket is derived from per-month quantiles.

Stationary fits are handled by the same interfaces: their annual law is
the fitted GEV itself, so the lifetime CDF is F(x)^D and the equivalent
design level coincides with the classical N-year return level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from gevdesign._core import kernels as _k
from gevdesign.errors import DataError, InversionError
from gevdesign.gev import GevParams, gev_quantile
from gevdesign.nonstationary import FittedModel
from gevdesign.stationary import StationaryFit

__all__ = ["ReturnLevelCurve", "DesignLevelResult", "monthly_quantile", "annual_cdf",
           "annual_log_cdf", "annual_return_level", "annual_return_level_wald",
           "lifetime_cdf", "lifetime_log_cdf", "equivalent_design_level",
           "method_label", "held_flat_years"]

AnyFit = Union[FittedModel, StationaryFit]


@dataclass
class ReturnLevelCurve:
    return_period: float
    points: list[dict] = field(default_factory=list)   # {year, level, lower, upper}


@dataclass
class DesignLevelResult:
    level: float
    target_survival: float
    lifetime_years: int
    p_annual: float
    interval: tuple[float, float]
    method: str                       # annual | monthly | nonstationary

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "target_survival": self.target_survival,
            "lifetime_years": self.lifetime_years,
            "p_annual": self.p_annual,
            "interval": list(self.interval),
            "method": self.method,
        }


def method_label(fit: AnyFit) -> str:
    if isinstance(fit, StationaryFit):
        return "annual"
    return "monthly" if fit.model_kind == "seasonal" else "nonstationary"


def _component_params(fit: AnyFit, years: Sequence[int]) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-component (mu, sigma, xi): 12 months per year, or one law per year."""
    if isinstance(fit, StationaryFit):
        n = len(years)
        return (np.full(n, fit.params.mu), np.full(n, fit.params.sigma), fit.params.xi)
    months = np.tile(np.arange(1, 13), len(years))
    yrs = np.repeat(np.asarray(list(years), dtype=int), 12)
    mu, ls = fit.linear_predictors(months, yrs)
    return np.ascontiguousarray(mu), np.ascontiguousarray(np.exp(ls)), fit.xi


def _log_cdf_sum(x: float, mu: np.ndarray, sigma: np.ndarray, xi: float) -> float:
    xs = np.full_like(mu, float(x))
    out = np.empty_like(mu)
    _k.logcdf(xs, mu, sigma, xi, out)
    return float(np.sum(out))


def monthly_quantile(fit: FittedModel, month: int, year: int, p: float) -> float:
    """Quantile of one monthly-maximum law of the fitted surface."""
    if isinstance(fit, StationaryFit):
        raise DataError("monthly quantiles require a monthly (seasonal or tensor) model")
    return float(gev_quantile(p, fit.params_at(month, year)))


def annual_log_cdf(fit: AnyFit, x: float, year: int) -> float:
    mu, sigma, xi = _component_params(fit, [year])
    return _log_cdf_sum(x, mu, sigma, xi)


def annual_cdf(fit: AnyFit, x: float, year: int) -> float:
    """P(annual maximum <= x) for the given year, via the 12-month product."""
    return math.exp(annual_log_cdf(fit, x, year))


def lifetime_log_cdf(fit: AnyFit, x: float, years: Sequence[int]) -> float:
    if len(years) == 0:
        raise DataError("years list must be non-empty")
    mu, sigma, xi = _component_params(fit, years)
    return _log_cdf_sum(x, mu, sigma, xi)


def lifetime_cdf(fit: AnyFit, x: float, years: Sequence[int]) -> float:
    """P(maximum over the whole years list <= x), double product in log space."""
    return math.exp(lifetime_log_cdf(fit, x, years))


def _invert_log_cdf(mu: np.ndarray, sigma: np.ndarray, xi: float,
                    log_target: float, tol: float = 1e-12) -> float:
    """Solve sum(logF_j(x)) = log_target with a guaranteed initial bracket."""
    n_comp = mu.size
    target = math.exp(log_target)
    q_hi = np.empty_like(mu)
    q_lo = np.empty_like(mu)
    _k.quantile(np.full_like(mu, target ** (1.0 / n_comp)), mu, sigma, xi, q_hi)
    _k.quantile(np.full_like(mu, target), mu, sigma, xi, q_lo)
    pad = 3.0 * float(sigma.max())
    lo = float(q_lo.max()) - pad
    hi = float(q_hi.max()) + pad

    def g(x):
        return _log_cdf_sum(x, mu, sigma, xi) - log_target

    g_lo, g_hi = g(lo), g(hi)
    width = max(hi - lo, 1.0)
    for _ in range(20):
        if g_lo <= 0.0 <= g_hi:
            break
        if g_lo > 0.0:
            lo -= width
            g_lo = g(lo)
        if g_hi < 0.0:
            hi += width
            g_hi = g(hi)
        width *= 2.0
    else:
        raise InversionError(
            f"could not bracket the root after 20 expansions (target={target:g})"
        )
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    return float(brentq(g, lo, hi, xtol=tol, rtol=8.9e-16, maxiter=200))


def annual_return_level(fit: AnyFit, n_years: float, year: int) -> float:
    """Level exceeded on average once every n_years, for the given year."""
    if n_years <= 1:
        raise DataError(f"return period must exceed 1 year, got {n_years}")
    mu, sigma, xi = _component_params(fit, [year])
    return _invert_log_cdf(mu, sigma, xi, math.log1p(-1.0 / n_years))


def annual_return_level_wald(fit: FittedModel, n_years: float, year: int,
                             step: float = 1e-5) -> tuple[float, float, float]:
    """Return level with a 95% Wald interval from the penalized information.

    The coefficient covariance is the inverse penalized Hessian; the level
    gradient comes from implicit differentiation of the annual-CDF root.
    """
    level = annual_return_level(fit, n_years, year)
    theta = np.concatenate([fit.beta_mu, fit.beta_logsigma, [fit.xi]])
    p = fit.beta_mu.size
    months = np.arange(1, 13)
    x12 = fit.structure.design_matrix(months, np.full(12, year))

    def log_cdf_at(t, x):
        mu = x12 @ t[:p]
        sigma = np.exp(x12 @ t[p:2 * p])
        return _log_cdf_sum(x, np.ascontiguousarray(mu), np.ascontiguousarray(sigma),
                            float(t[-1]))

    dc_dx = (log_cdf_at(theta, level + step) - log_cdf_at(theta, level - step)) / (2 * step)
    grad = np.empty(theta.size)
    for j in range(theta.size):
        e = np.zeros(theta.size)
        e[j] = step
        grad[j] = (log_cdf_at(theta + e, level) - log_cdf_at(theta - e, level)) / (2 * step)
    dlevel = -grad / dc_dx
    cov = np.linalg.pinv(fit.penalized_hessian)
    var = float(dlevel @ cov @ dlevel)
    half = 1.959963984540054 * math.sqrt(max(var, 0.0))
    return level, level - half, level + half


def equivalent_design_level(fit: AnyFit, years: Sequence[int], p_annual: float,
                            interval: tuple[float, float] = (float("nan"), float("nan")),
                            ) -> DesignLevelResult:
    """Quantile of the lifetime-maximum law matching the stationary survival target.

    Solves P(lifetime max <= x) = (1 - p_annual)^len(years); in a stationary
    climate this is exactly the 1/p_annual-year return level.
    """
    if not 0.0 < p_annual < 1.0:
        raise DataError(f"p_annual must lie in (0, 1), got {p_annual}")
    if len(years) == 0:
        raise DataError("years list must be non-empty")
    d_l = len(years)
    log_target = d_l * math.log1p(-p_annual)
    mu, sigma, xi = _component_params(fit, years)
    level = _invert_log_cdf(mu, sigma, xi, log_target)
    return DesignLevelResult(
        level=level,
        target_survival=(1.0 - p_annual) ** d_l,
        lifetime_years=d_l,
        p_annual=p_annual,
        interval=interval,
        method=method_label(fit),
    )


def held_flat_years(first: int, last: int, lifetime: int) -> list[int]:
    """Projection window extended to the target lifetime by repeating the terminal year."""
    years = list(range(first, last + 1))
    if len(years) > lifetime:
        return years[:lifetime]
    while len(years) < lifetime:
        years.append(last)
    return years
