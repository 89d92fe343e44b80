"""Residual diagnostics: PIT residuals, ACF/PACF, QQ data.

Each included block maximum is pushed through its fitted per-record CDF
and mapped to the standard Gumbel scale via -log(-log u). Under a correct
model the residuals are iid standard Gumbel, so remaining autocorrelation
indicates dependence the monthly-independence assumption would violate.
Excluded records leave gaps; the ACF reindexes contiguously and reports
the gap count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from gevdesign.errors import DataError
from gevdesign.gev import gev_cdf
from gevdesign.ingest import BlockMaximaSeries
from gevdesign.nonstationary import FittedModel
from gevdesign.stationary import StationaryFit

__all__ = ["PitResiduals", "pit_residuals", "acf", "pacf", "qq_data"]

U_CLIP = 1e-12
AnyFit = Union[FittedModel, StationaryFit]


@dataclass
class PitResiduals:
    values: np.ndarray            # Gumbel-scale residuals, calendar order
    labels: list                  # (year, month) per residual
    n_gaps: int                   # excluded records skipped over


def pit_residuals(fit: AnyFit, bm: BlockMaximaSeries) -> PitResiduals:
    """Probability-integral-transform residuals on the standard Gumbel scale."""
    records = sorted(bm.records, key=lambda r: (r.year, r.month or 0))
    values, labels = [], []
    n_gaps = 0
    for r in records:
        if not r.included:
            n_gaps += 1
            continue
        if isinstance(fit, StationaryFit):
            params = fit.params
        else:
            params = fit.params_at(r.month, r.year)
        u = float(np.clip(gev_cdf(r.maximum, params), U_CLIP, 1.0 - U_CLIP))
        values.append(-math.log(-math.log(u)))
        labels.append((r.year, r.month))
    if not values:
        raise DataError("no included records to diagnose")
    return PitResiduals(values=np.array(values), labels=labels, n_gaps=n_gaps)


def acf(resid: np.ndarray, max_lag: int) -> tuple[np.ndarray, float]:
    """Biased-normalization sample autocorrelations at lags 0..max_lag.

    Returns (correlations, white-noise band 1.96/sqrt(n)).
    """
    x = np.asarray(resid, dtype=float)
    n = x.size
    if n <= max_lag + 2:
        raise DataError(f"need more than max_lag + 2 = {max_lag + 2} points, got {n}")
    xc = x - x.mean()
    denom = float(np.sum(xc * xc))
    if denom == 0.0:
        raise DataError("constant residual series")
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    for k in range(1, max_lag + 1):
        rho[k] = float(np.sum(xc[:-k] * xc[k:])) / denom
    return rho, 1.96 / math.sqrt(n)


def pacf(resid: np.ndarray, max_lag: int) -> tuple[np.ndarray, float]:
    """Partial autocorrelations at lags 1..max_lag via Durbin-Levinson."""
    rho, band = acf(resid, max_lag)
    phi = np.zeros((max_lag + 1, max_lag + 1))
    out = np.empty(max_lag)
    phi[1, 1] = rho[1]
    out[0] = rho[1]
    for k in range(2, max_lag + 1):
        num = rho[k] - np.sum(phi[k - 1, 1:k] * rho[k - 1:0:-1])
        den = 1.0 - np.sum(phi[k - 1, 1:k] * rho[1:k])
        phi[k, k] = num / den
        phi[k, 1:k] = phi[k - 1, 1:k] - phi[k, k] * phi[k - 1, k - 1:0:-1]
        out[k - 1] = phi[k, k]
    return out, band


def qq_data(fit: AnyFit, bm: BlockMaximaSeries) -> np.ndarray:
    """(empirical, model) Gumbel-scale quantile pairs at Hazen positions, sorted."""
    resid = pit_residuals(fit, bm)
    x = np.sort(resid.values)
    n = x.size
    pos = (np.arange(1, n + 1) - 0.5) / n
    model_q = -np.log(-np.log(pos))
    return np.column_stack([x, model_q])
