"""Compiled and numpy kernel backends must agree to round-off."""

import numpy as np
import pytest

from gevdesign._core import BACKEND
from gevdesign._core import _gevkernels_py as py_k

cy_k = pytest.importorskip(
    "gevdesign._core._gevkernels",
    reason="compiled kernels not built; parity trivially holds on the fallback",
)


def _case(rng, n, xi):
    mu = rng.normal(4.0, 1.0, n)
    sigma = np.exp(rng.normal(0.2, 0.2, n))
    u = rng.uniform(0.01, 0.99, n)
    x = np.empty(n)
    cy_k.quantile(u, mu, sigma, xi, x)
    return x, mu, sigma


@pytest.mark.parametrize("xi", [-0.3, -1e-9, 0.0, 1e-9, 0.15, 0.6])
def test_loglik_and_grad_parity(xi):
    rng = np.random.default_rng(11)
    x, mu, sigma = _case(rng, 500, xi)
    ll_c = cy_k.loglik(x, mu, sigma, xi)
    ll_p = py_k.loglik(x, mu, sigma, xi)
    assert ll_c == pytest.approx(ll_p, rel=1e-12)

    dmu_c, dls_c = np.empty_like(x), np.empty_like(x)
    dmu_p, dls_p = np.empty_like(x), np.empty_like(x)
    llc, dxi_c = cy_k.loglik_grad(x, mu, sigma, xi, dmu_c, dls_c)
    llp, dxi_p = py_k.loglik_grad(x, mu, sigma, xi, dmu_p, dls_p)
    assert llc == pytest.approx(llp, rel=1e-12)
    assert dxi_c == pytest.approx(dxi_p, rel=1e-9, abs=1e-9)
    assert np.allclose(dmu_c, dmu_p, rtol=1e-11, atol=1e-12)
    assert np.allclose(dls_c, dls_p, rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("fn", ["cdf", "logcdf", "logpdf", "quantile"])
@pytest.mark.parametrize("xi", [-0.3, 0.0, 0.4])
def test_elementwise_parity(fn, xi):
    rng = np.random.default_rng(13)
    x, mu, sigma = _case(rng, 300, xi)
    arg = rng.uniform(0.001, 0.999, 300) if fn == "quantile" else x
    out_c, out_p = np.empty_like(x), np.empty_like(x)
    getattr(cy_k, fn)(arg, mu, sigma, xi, out_c)
    getattr(py_k, fn)(arg, mu, sigma, xi, out_p)
    assert np.allclose(out_c, out_p, rtol=1e-12, atol=1e-13, equal_nan=True)


def test_out_of_support_sentinels_match():
    mu = np.array([0.0, 0.0])
    sigma = np.array([1.0, 1.0])
    x = np.array([0.5, -10.0])
    for xi in (0.3, -0.3):
        out_c, out_p = np.empty(2), np.empty(2)
        cy_k.cdf(x, mu, sigma, xi, out_c)
        py_k.cdf(x, mu, sigma, xi, out_p)
        assert np.array_equal(out_c, out_p)
        assert cy_k.loglik(x, mu, sigma, 0.3) == py_k.loglik(x, mu, sigma, 0.3) == -np.inf


def test_backend_reports_cython_when_built():
    assert BACKEND in ("cython", "numpy")
