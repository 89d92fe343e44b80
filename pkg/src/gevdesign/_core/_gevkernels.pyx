# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled GEV kernels.

Hot loops of the package: log-likelihood, analytic gradient, CDF and
quantile evaluation for per-record (mu, sigma) and a shared shape xi.
All routines use the reparameterization L = log1p(xi*z)/xi, which is
exact for xi != 0 and reduces continuously to L = z in the Gumbel limit,
so values are continuous across the branch threshold XI_EPS.

The numpy fallback in ``_gevkernels_py`` implements identical formulas.
"""

from libc.math cimport exp, expm1, log, log1p

cdef double XI_EPS = 1e-8
cdef double NEG_INF = float("-inf")
cdef double POS_INF = float("inf")
# exp(-L) overflows past ~709; treat as log-density -inf (density underflows to 0)
cdef double L_UNDERFLOW = -700.0


cpdef double loglik(const double[::1] x, const double[::1] mu,
                    const double[::1] sigma, double xi):
    """Sum of GEV log-densities; -inf if any point is outside the support."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double z, w, u, L, ll = 0.0
    for i in range(n):
        z = (x[i] - mu[i]) / sigma[i]
        if xi > XI_EPS or xi < -XI_EPS:
            w = xi * z
            u = 1.0 + w
            if u <= 0.0:
                return NEG_INF
            L = log1p(w) / xi
        else:
            L = z
        if L < L_UNDERFLOW:
            return NEG_INF
        ll += -log(sigma[i]) - (1.0 + xi) * L - exp(-L)
    return ll


cpdef tuple loglik_grad(const double[::1] x, const double[::1] mu,
                        const double[::1] sigma, double xi,
                        double[::1] dmu, double[::1] dlogsigma):
    """Log-likelihood with per-record d/dmu_i, d/dlogsigma_i and total d/dxi.

    Returns (loglik, dxi_total). When loglik is -inf the gradient outputs
    are meaningless and must be discarded by the caller.
    """
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double z, w, u, L, t, omt, a, ll = 0.0, dxi = 0.0
    cdef bint gumbel = -XI_EPS <= xi <= XI_EPS
    for i in range(n):
        z = (x[i] - mu[i]) / sigma[i]
        if gumbel:
            u = 1.0
            L = z
        else:
            w = xi * z
            u = 1.0 + w
            if u <= 0.0:
                return NEG_INF, 0.0
            L = log1p(w) / xi
        if L < L_UNDERFLOW:
            return NEG_INF, 0.0
        t = exp(-L)
        omt = -expm1(-L)            # 1 - t, accurate for small L
        ll += -log(sigma[i]) - (1.0 + xi) * L - t
        a = (1.0 + xi - t) / u
        dmu[i] = a / sigma[i]
        dlogsigma[i] = z * a - 1.0
        if gumbel:
            dxi += 0.5 * z * z * omt - z
        else:
            dxi += (omt / xi) * (L - z / u) - z / u
    return ll, dxi


cpdef void logpdf(const double[::1] x, const double[::1] mu,
                  const double[::1] sigma, double xi, double[::1] out):
    """Per-record GEV log-density; -inf outside the support."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double z, w, u, L
    for i in range(n):
        z = (x[i] - mu[i]) / sigma[i]
        if xi > XI_EPS or xi < -XI_EPS:
            w = xi * z
            u = 1.0 + w
            if u <= 0.0:
                out[i] = NEG_INF
                continue
            L = log1p(w) / xi
        else:
            L = z
        if L < L_UNDERFLOW:
            out[i] = NEG_INF
            continue
        out[i] = -log(sigma[i]) - (1.0 + xi) * L - exp(-L)


cpdef void logcdf(const double[::1] x, const double[::1] mu,
                  const double[::1] sigma, double xi, double[::1] out):
    """log F(x) = -exp(-L); 0 above the upper bound, -inf below the lower."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double z, w, u, L
    for i in range(n):
        z = (x[i] - mu[i]) / sigma[i]
        if xi > XI_EPS or xi < -XI_EPS:
            w = xi * z
            u = 1.0 + w
            if u <= 0.0:
                out[i] = NEG_INF if xi > 0.0 else 0.0
                continue
            L = log1p(w) / xi
        else:
            L = z
        if L < L_UNDERFLOW:
            out[i] = NEG_INF
            continue
        out[i] = -exp(-L)


cpdef void cdf(const double[::1] x, const double[::1] mu,
               const double[::1] sigma, double xi, double[::1] out):
    """GEV CDF; 0 below the lower support bound, 1 above the upper."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double z, w, u, L
    for i in range(n):
        z = (x[i] - mu[i]) / sigma[i]
        if xi > XI_EPS or xi < -XI_EPS:
            w = xi * z
            u = 1.0 + w
            if u <= 0.0:
                out[i] = 0.0 if xi > 0.0 else 1.0
                continue
            L = log1p(w) / xi
        else:
            L = z
        if L < L_UNDERFLOW:
            out[i] = 0.0
            continue
        out[i] = exp(-exp(-L))


cpdef void quantile(const double[::1] p, const double[::1] mu,
                    const double[::1] sigma, double xi, double[::1] out):
    """Exact inverse of the CDF for probabilities strictly inside (0, 1)."""
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double y
    for i in range(n):
        y = log(-log(p[i]))
        if xi > XI_EPS or xi < -XI_EPS:
            out[i] = mu[i] + sigma[i] * expm1(-xi * y) / xi
        else:
            out[i] = mu[i] - sigma[i] * y
