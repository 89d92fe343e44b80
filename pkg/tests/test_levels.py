"""Annual CDF reconstruction, return-level inversion, lifetime design levels."""

import math

import numpy as np
import pytest

from gevdesign.errors import DataError
from gevdesign.gev import GevParams, gev_quantile, sample_from_uniforms
from gevdesign.levels import (annual_cdf, annual_log_cdf, annual_return_level,
                              annual_return_level_wald, equivalent_design_level,
                              held_flat_years, lifetime_cdf, lifetime_log_cdf,
                              monthly_quantile)
from gevdesign.nonstationary import FittedModel
from gevdesign.splines import BasisSpec
from gevdesign.stationary import StationaryFit

EXP_MINUS_12 = 6.1442123533282097587e-06


def make_flat_model(mu=0.0, sigma=1.0, xi=0.0, kind="seasonal"):
    """Hand-built model whose 12 monthly laws are all GEV(mu, sigma, xi)."""
    spec = BasisSpec(year_range=(2000, 2029))
    from gevdesign.splines import ModelStructure

    n = ModelStructure(spec, kind).n_coef
    beta_mu = np.zeros(n)
    beta_mu[0] = mu
    beta_ls = np.zeros(n)
    beta_ls[0] = math.log(sigma)
    return FittedModel(
        model_kind=kind, spec=spec, beta_mu=beta_mu, beta_logsigma=beta_ls,
        xi=xi, lambdas={"month": 1.0, "year": 1.0},
        penalized_hessian=np.eye(2 * n + 1), loglik=0.0, penalized_loglik=0.0,
        edf=3.0, edf_by_block={}, data_fingerprint="manual",
        records=[(y, m, 0.0) for y in (2000, 2001) for m in range(1, 13)],
    )


def make_stationary(mu=0.0, sigma=1.0, xi=0.0):
    return StationaryFit(params=GevParams(mu, sigma, xi), cov=np.eye(3) * 1e-4,
                         loglik=0.0, n=30, converged=True)


class TestAnnualCdf:
    def test_twelve_identical_gumbel_months(self):
        fit = make_flat_model(0.0, 1.0, 0.0)
        assert annual_cdf(fit, 0.0, 2005) == pytest.approx(EXP_MINUS_12, rel=1e-10)

    def test_below_all_lower_bounds_is_zero(self):
        fit = make_flat_model(5.0, 1.0, 0.4)
        lower = 5.0 - 1.0 / 0.4
        assert annual_cdf(fit, lower - 0.5, 2005) == 0.0

    def test_monte_carlo_oracle(self, seasonal_fit):
        year = 2000
        months = np.arange(1, 13)
        mu, ls = seasonal_fit.linear_predictors(months, np.full(12, year))
        sigma = np.exp(ls)
        rng = np.random.default_rng(71)
        n_sim = 100_000
        u = rng.random((n_sim, 12))
        draws = sample_from_uniforms(u.ravel(), np.tile(mu, n_sim),
                                     np.tile(sigma, n_sim), seasonal_fit.xi)
        annual_max = draws.reshape(n_sim, 12).max(axis=1)
        for x in np.quantile(annual_max, [0.1, 0.5, 0.9, 0.99]):
            emp = np.mean(annual_max <= x)
            assert annual_cdf(seasonal_fit, float(x), year) == pytest.approx(emp, abs=0.01)

    def test_monotone_in_x(self, seasonal_fit):
        xs = np.linspace(4.0, 15.0, 40)
        vals = [annual_cdf(seasonal_fit, float(x), 2000) for x in xs]
        assert np.all(np.diff(vals) >= 0)


class TestAnnualReturnLevel:
    def test_identical_months_closed_form(self):
        params = GevParams(3.0, 0.8, 0.1)
        fit = make_flat_model(params.mu, params.sigma, params.xi)
        level = annual_return_level(fit, 100, 2005)
        expected = gev_quantile((1 - 1 / 100) ** (1 / 12), params)
        assert level == pytest.approx(expected, abs=1e-8)

    def test_dominant_month(self):
        # one month towers over the others: annual level collapses to its quantile
        spec = BasisSpec(k_month=12, year_range=(2000, 2029))
        fit = make_flat_model(0.0, 1.0, 0.0)
        fit.spec = spec
        from gevdesign.splines import ModelStructure

        st = ModelStructure(spec, "seasonal")
        object.__setattr__(fit, "_structure", st)
        x = st.design_matrix(list(range(1, 13)), [2000] * 12)
        target = np.full(12, -1.5)
        target[0] = 10.0
        beta, *_ = np.linalg.lstsq(x, target, rcond=None)
        fit.beta_mu = beta
        fit.beta_logsigma = np.zeros(st.n_coef)
        profile = np.array([fit.params_at(m, 2005).mu for m in range(1, 13)])
        assert profile[0] - profile[1:].max() > 9.0   # January dominates by > 9 sigma
        jan = fit.params_at(1, 2005)
        level = annual_return_level(fit, 100, 2005)
        assert level == pytest.approx(gev_quantile(0.99, jan), abs=1e-3)

    def test_inversion_identity(self, seasonal_fit):
        for n in (10, 100, 500):
            level = annual_return_level(seasonal_fit, n, 2000)
            assert annual_log_cdf(seasonal_fit, level, 2000) == pytest.approx(
                math.log1p(-1 / n), abs=1e-10)

    def test_increasing_in_n(self, seasonal_fit):
        levels = [annual_return_level(seasonal_fit, n, 2000) for n in (2, 10, 50, 200)]
        assert np.all(np.diff(levels) > 0)

    def test_stationary_fit_uses_annual_law(self):
        fit = make_stationary(0.0, 1.0, 0.0)
        assert annual_return_level(fit, 100, 2000) == pytest.approx(
            gev_quantile(0.99, fit.params), abs=1e-10)

    def test_wald_interval_contains_level(self, tensor_fit):
        level, lo, hi = annual_return_level_wald(tensor_fit, 100, 2000)
        assert lo < level < hi
        assert level == pytest.approx(annual_return_level(tensor_fit, 100, 2000), abs=1e-9)


class TestLifetimeCdf:
    def test_single_year_reduces_to_annual(self, seasonal_fit):
        x = 9.0
        assert lifetime_cdf(seasonal_fit, x, [2001]) == pytest.approx(
            annual_cdf(seasonal_fit, x, 2001), rel=1e-12)

    def test_stationary_power_identity_exact_in_log_space(self):
        fit = make_stationary(1.0, 0.7, 0.05)
        x = 4.0
        lifetime = lifetime_log_cdf(fit, x, list(range(2000, 2030)))
        annual = annual_log_cdf(fit, x, 2000)
        assert abs(lifetime - 30.0 * annual) <= 1e-12 * abs(lifetime)

    def test_seasonal_model_power_identity(self, seasonal_fit):
        x = 10.0
        years = [2000] * 30
        assert lifetime_log_cdf(seasonal_fit, x, years) == pytest.approx(
            30.0 * annual_log_cdf(seasonal_fit, x, 2000), rel=1e-12)

    def test_disjoint_composition(self, tensor_fit):
        x = 11.0
        a = list(range(1985, 1995))
        b = list(range(1995, 2010))
        assert lifetime_log_cdf(tensor_fit, x, a + b) == pytest.approx(
            lifetime_log_cdf(tensor_fit, x, a) + lifetime_log_cdf(tensor_fit, x, b),
            rel=1e-12)

    def test_monte_carlo_oracle(self):
        params = GevParams(4.0, 1.0, 0.1)
        fit = make_flat_model(params.mu, params.sigma, params.xi)
        years = list(range(2000, 2030))
        rng = np.random.default_rng(88)
        n_sim = 50_000
        mx = np.full(n_sim, -np.inf)
        mu = np.full(n_sim * 12, params.mu)
        sg = np.full(n_sim * 12, params.sigma)
        for _ in years:
            draws = sample_from_uniforms(rng.random(n_sim * 12), mu, sg, params.xi)
            mx = np.maximum(mx, draws.reshape(n_sim, 12).max(axis=1))
        for x in np.quantile(mx, [0.25, 0.5, 0.74, 0.9]):
            emp = float(np.mean(mx <= x))
            assert lifetime_cdf(fit, float(x), years) == pytest.approx(emp, abs=0.01)


class TestEquivalentDesignLevel:
    def test_stationary_identity_with_return_level(self):
        fit = make_stationary(2.0, 1.3, 0.15)
        years = list(range(2010, 2040))
        design = equivalent_design_level(fit, years, 0.01)
        rl100 = gev_quantile(0.99, fit.params)
        assert design.level == pytest.approx(rl100, abs=1e-8)

    def test_target_survival_formula(self):
        fit = make_stationary()
        design = equivalent_design_level(fit, list(range(2000, 2030)), 0.01)
        assert design.target_survival == pytest.approx(0.99 ** 30, abs=1e-15)
        assert design.target_survival == pytest.approx(0.74, abs=0.01)

    def test_bounded_by_per_year_levels(self):
        # trending truth: design level sits inside the per-year RL100 envelope
        spec = BasisSpec(year_range=(2000, 2029))
        from gevdesign.splines import ModelStructure

        st = ModelStructure(spec, "tensor")
        fit = make_flat_model(5.0, 1.0, 0.05, kind="tensor")
        # add a year trend through the year-marginal block
        rows = st.design_matrix([1] * 30, list(range(2000, 2030)))
        trend = np.linspace(-1.0, 1.0, 30)
        sl = st.sl_year
        beta_y, *_ = np.linalg.lstsq(rows[:, sl], trend, rcond=None)
        fit.beta_mu[sl] = beta_y
        years = list(range(2000, 2030))
        per_year = [annual_return_level(fit, 100, y) for y in years]
        design = equivalent_design_level(fit, years, 0.01)
        assert min(per_year) <= design.level <= max(per_year)

    def test_years_order_invariance(self, tensor_fit):
        years = list(range(1985, 2015))
        a = equivalent_design_level(tensor_fit, years, 0.01).level
        rng = np.random.default_rng(5)
        shuffled = list(years)
        rng.shuffle(shuffled)
        b = equivalent_design_level(tensor_fit, shuffled, 0.01).level
        assert a == pytest.approx(b, abs=1e-12)

    def test_method_labels(self, seasonal_fit, tensor_fit):
        years = [2000] * 30
        assert equivalent_design_level(make_stationary(), years, 0.01).method == "annual"
        assert equivalent_design_level(seasonal_fit, [1990] * 30, 0.01).method == "monthly"
        assert equivalent_design_level(tensor_fit, [1990] * 30, 0.01).method == \
            "nonstationary"

    def test_domain_errors(self, seasonal_fit):
        with pytest.raises(DataError):
            equivalent_design_level(seasonal_fit, [], 0.01)
        with pytest.raises(DataError):
            equivalent_design_level(seasonal_fit, [2000], 1.5)


class TestMonthlyQuantile:
    def test_seasonal_cycle_shape(self, seasonal_fit):
        q = [monthly_quantile(seasonal_fit, m, 2000, 0.99) for m in range(1, 13)]
        assert q[0] > q[6]            # winter-dominant synthetic truth
        assert len(set(np.round(q, 6))) > 6

    def test_year_invariance_for_seasonal(self, seasonal_fit):
        a = monthly_quantile(seasonal_fit, 3, 1985, 0.99)
        b = monthly_quantile(seasonal_fit, 3, 2014, 0.99)
        assert a == b

    def test_roundtrip_through_cdf(self, seasonal_fit):
        from gevdesign.gev import gev_cdf

        p = seasonal_fit.params_at(5, 2000)
        q = monthly_quantile(seasonal_fit, 5, 2000, 0.97)
        assert gev_cdf(q, p) == pytest.approx(0.97, rel=1e-12)


class TestHeldFlatYears:
    def test_extension_repeats_terminal_year(self):
        years = held_flat_years(2081, 2100, 30)
        assert len(years) == 30
        assert years[:20] == list(range(2081, 2101))
        assert years[20:] == [2100] * 10

    def test_window_longer_than_lifetime_truncated(self):
        assert held_flat_years(2000, 2049, 30) == list(range(2000, 2030))
