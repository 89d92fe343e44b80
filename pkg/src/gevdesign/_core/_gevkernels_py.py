"""Pure-numpy fallback for the compiled GEV kernels.

Implements formulas identical to ``_gevkernels.pyx`` so both backends
agree to floating-point round-off. Selected at import time by
``gevdesign._core`` when the extension is unavailable or disabled.
"""

import numpy as np

XI_EPS = 1e-8
L_UNDERFLOW = -700.0


def _stable_L(z, xi):
    """L = log1p(xi*z)/xi for xi != 0, else z; nan where out of support."""
    if abs(xi) <= XI_EPS:
        return z.copy(), np.ones_like(z)
    u = 1.0 + xi * z
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.where(u > 0.0, np.log1p(xi * z) / xi, np.nan)
    return L, u


def loglik(x, mu, sigma, xi):
    z = (x - mu) / sigma
    L, u = _stable_L(z, xi)
    if np.any(~np.isfinite(L)) or np.any(L < L_UNDERFLOW):
        return float("-inf")
    return float(np.sum(-np.log(sigma) - (1.0 + xi) * L - np.exp(-L)))


def loglik_grad(x, mu, sigma, xi, dmu, dlogsigma):
    z = (x - mu) / sigma
    L, u = _stable_L(z, xi)
    if np.any(~np.isfinite(L)) or np.any(L < L_UNDERFLOW):
        return float("-inf"), 0.0
    t = np.exp(-L)
    omt = -np.expm1(-L)
    ll = float(np.sum(-np.log(sigma) - (1.0 + xi) * L - t))
    a = (1.0 + xi - t) / u
    dmu[:] = a / sigma
    dlogsigma[:] = z * a - 1.0
    if abs(xi) <= XI_EPS:
        dxi = float(np.sum(0.5 * z * z * omt - z))
    else:
        zu = z / u
        dxi = float(np.sum((omt / xi) * (L - zu) - zu))
    return ll, dxi


def logpdf(x, mu, sigma, xi, out):
    z = (x - mu) / sigma
    L, u = _stable_L(z, xi)
    bad = ~np.isfinite(L) | (L < L_UNDERFLOW)
    Ls = np.where(bad, 0.0, L)
    out[:] = np.where(bad, -np.inf, -np.log(sigma) - (1.0 + xi) * Ls - np.exp(-Ls))


def logcdf(x, mu, sigma, xi, out):
    z = (x - mu) / sigma
    L, u = _stable_L(z, xi)
    oos = ~np.isfinite(L)
    Ls = np.where(oos | (L < L_UNDERFLOW), 0.0, L)
    vals = -np.exp(-Ls)
    vals = np.where(L < L_UNDERFLOW, -np.inf, vals)
    if xi > XI_EPS:
        vals = np.where(oos, -np.inf, vals)
    elif xi < -XI_EPS:
        vals = np.where(oos, 0.0, vals)
    out[:] = vals


def cdf(x, mu, sigma, xi, out):
    z = (x - mu) / sigma
    L, u = _stable_L(z, xi)
    oos = ~np.isfinite(L)
    Ls = np.where(oos | (L < L_UNDERFLOW), 0.0, L)
    vals = np.exp(-np.exp(-Ls))
    vals = np.where(L < L_UNDERFLOW, 0.0, vals)
    if xi > XI_EPS:
        vals = np.where(oos, 0.0, vals)
    elif xi < -XI_EPS:
        vals = np.where(oos, 1.0, vals)
    out[:] = vals


def quantile(p, mu, sigma, xi, out):
    y = np.log(-np.log(p))
    if abs(xi) <= XI_EPS:
        out[:] = mu - sigma * y
    else:
        out[:] = mu + sigma * np.expm1(-xi * y) / xi
