"""Synthetic monthly-maxima generator with known GEV truth.

The truth surfaces are harmonic in month with optional linear drift and a
linearly evolving seasonal amplitude:

    mu(m, y) = mean + A(y) * cos(2*pi*(m - phase)/12) + trend * (y - y0)
    A(y)     = amplitude + amplitude_trend * (y - y0)

and likewise for log sigma. Month-to-month dependence can be planted
through a Gaussian AR(1) copula on the uniform draws (rho = 0 gives
independent maxima). Used by the recovery oracles and the `simulate` CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from gevdesign.errors import DataError
from gevdesign.gev import sample_from_uniforms
from gevdesign.ingest import BlockMaximaSeries, BlockRecord

__all__ = ["SurfaceTruth", "TruthConfig", "truth_params", "simulate_block_maxima",
           "annual_from_monthly"]


@dataclass(frozen=True)
class SurfaceTruth:
    mean: float
    amplitude: float = 0.0
    phase_month: float = 1.0
    trend_per_year: float = 0.0
    amplitude_trend_per_year: float = 0.0

    def value(self, month, year, first_year: int):
        dy = np.asarray(year, dtype=float) - first_year
        amp = self.amplitude + self.amplitude_trend_per_year * dy
        cyc = np.cos(2.0 * math.pi * (np.asarray(month, dtype=float) - self.phase_month) / 12.0)
        return self.mean + amp * cyc + self.trend_per_year * dy

    def to_dict(self) -> dict:
        return {"mean": self.mean, "amplitude": self.amplitude,
                "phase_month": self.phase_month, "trend_per_year": self.trend_per_year,
                "amplitude_trend_per_year": self.amplitude_trend_per_year}


@dataclass(frozen=True)
class TruthConfig:
    mu: SurfaceTruth = field(default_factory=lambda: SurfaceTruth(mean=4.0, amplitude=2.0))
    logsigma: SurfaceTruth = field(default_factory=lambda: SurfaceTruth(mean=0.2, amplitude=0.1))
    xi: float = 0.05
    ar1_rho: float = 0.0

    def to_dict(self) -> dict:
        return {"schema": 1, "mu": self.mu.to_dict(), "logsigma": self.logsigma.to_dict(),
                "xi": self.xi, "ar1_rho": self.ar1_rho}

    @classmethod
    def from_dict(cls, d: dict) -> "TruthConfig":
        if d.get("schema", 1) != 1:
            raise DataError(f"unsupported truth-config schema {d.get('schema')!r}")
        return cls(
            mu=SurfaceTruth(**d.get("mu", {"mean": 4.0, "amplitude": 2.0})),
            logsigma=SurfaceTruth(**d.get("logsigma", {"mean": 0.2, "amplitude": 0.1})),
            xi=float(d.get("xi", 0.05)),
            ar1_rho=float(d.get("ar1_rho", 0.0)),
        )


def truth_params(config: TruthConfig, month, year, first_year: int):
    """(mu, sigma) truth arrays at the given months/years."""
    mu = config.mu.value(month, year, first_year)
    sigma = np.exp(config.logsigma.value(month, year, first_year))
    return mu, sigma


def simulate_block_maxima(config: TruthConfig, first_year: int, last_year: int,
                          seed: int, scenario_label: str = "synthetic") -> BlockMaximaSeries:
    """Monthly maxima drawn from the truth surfaces, one record per (year, month)."""
    if last_year < first_year:
        raise DataError(f"empty year range {first_year}..{last_year}")
    years = np.repeat(np.arange(first_year, last_year + 1), 12)
    months = np.tile(np.arange(1, 13), last_year - first_year + 1)
    mu, sigma = truth_params(config, months, years, first_year)

    rng = np.random.default_rng(seed)
    n = years.size
    if abs(config.ar1_rho) > 0:
        rho = config.ar1_rho
        z = np.empty(n)
        z[0] = rng.standard_normal()
        eps = rng.standard_normal(n - 1)
        for t in range(1, n):
            z[t] = rho * z[t - 1] + math.sqrt(1.0 - rho * rho) * eps[t - 1]
        u = norm.cdf(z)
    else:
        u = rng.random(n)
    values = sample_from_uniforms(u, mu, sigma, config.xi)

    records = [BlockRecord(int(y), int(m), float(v), 1.0, True)
               for y, m, v in zip(years, months, values)]
    return BlockMaximaSeries(records=records, block_kind="monthly",
                             scenario_label=scenario_label)


def annual_from_monthly(bm: BlockMaximaSeries) -> BlockMaximaSeries:
    """Annual maxima over the 12 monthly maxima; a year needs all 12 included."""
    if bm.block_kind != "monthly":
        raise DataError("annual_from_monthly expects monthly block maxima")
    by_year: dict[int, list[BlockRecord]] = {}
    for r in bm.records:
        by_year.setdefault(r.year, []).append(r)
    records = []
    for year in sorted(by_year):
        rs = by_year[year]
        included = [r for r in rs if r.included]
        complete = len(included) == 12
        maximum = max((r.maximum for r in included), default=float("nan"))
        coverage = float(np.mean([r.coverage for r in rs]))
        records.append(BlockRecord(year=year, month=None, maximum=maximum,
                                   coverage=coverage, included=complete))
    return BlockMaximaSeries(records=records, block_kind="annual",
                             scenario_label=bm.scenario_label,
                             min_coverage=bm.min_coverage)
