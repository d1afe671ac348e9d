# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the volatility-recursion likelihoods.

One pass per call: the conditional-variance recursion, the standardized
residuals, the measurement residuals and both log-likelihood blocks are
accumulated without allocating intermediates.  Must stay numerically
interchangeable with kernels._pykernels (same formulas, same branch
rules); equivalence is enforced by tests.
"""

from libc.math cimport exp, isfinite, lgamma, log, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF LOG2PI = 1.8378770664093453
DEF LOGPDF_FLOOR = -690.77552789821368  # log(1e-300)

# error-distribution codes shared with the Python fallback
DEF DIST_NORMAL = 0
DEF DIST_STUDENT_T = 1
DEF DIST_TW = 2


cdef inline double _tw_logpdf(double u, double lam1, double lam2,
                              double k1, double bp) nogil:
    # log-density of the standardized two-sided Weibull at u
    cdef double t, lt
    if u < 0.0:
        t = -bp * u / lam1
        lt = log(t)
        return log(bp) + (k1 - 1.0) * lt - exp(k1 * lt)
    elif u > 0.0:
        if lam2 > 0.0:
            t = bp * u / lam2
            lt = log(t)
            return log(bp) + (k1 - 1.0) * lt - exp(k1 * lt)
        return LOGPDF_FLOOR
    else:
        if k1 == 1.0:
            return log(bp)
        return LOGPDF_FLOOR


cdef inline double _z_logpdf(double z, int dist, double tconst, double nu,
                             double lam1, double lam2, double k1,
                             double bp, double mu) nogil:
    if dist == DIST_NORMAL:
        return -0.5 * LOG2PI - 0.5 * z * z
    elif dist == DIST_STUDENT_T:
        return tconst - 0.5 * (nu + 1.0) * log(1.0 + z * z / (nu - 2.0))
    else:
        return _tw_logpdf(z + mu, lam1, lam2, k1, bp)


cdef inline double _t_const(double nu) nogil:
    # standardized Student-t normalizing constant
    return (lgamma(0.5 * (nu + 1.0)) - lgamma(0.5 * nu)
            - 0.5 * log((nu - 2.0) * 3.141592653589793))


def rg_filter(double[::1] r, double[::1] x, double h1,
              double omega, double beta, double gamma,
              double xi, double phi, double tau1, double tau2):
    """Variance recursion h_t = omega + beta h_{t-1} + gamma x_{t-1} plus
    residuals.  Returns (status, bad_index, h, z, eps); status 0 means ok,
    1 a nonpositive variance, 2 a non-finite intermediate."""
    cdef Py_ssize_t n = r.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e_arr = np.empty(n)
    cdef double[::1] h = h_arr
    cdef double[::1] z = z_arr
    cdef double[::1] eps = e_arr
    cdef Py_ssize_t t
    cdef double ht = h1, zt

    for t in range(n):
        if t > 0:
            ht = omega + beta * h[t - 1] + gamma * x[t - 1]
        if not isfinite(ht):
            return 2, t, h_arr, z_arr, e_arr
        if ht <= 0.0:
            return 1, t, h_arr, z_arr, e_arr
        h[t] = ht
        zt = r[t] / sqrt(ht)
        z[t] = zt
        eps[t] = x[t] - xi - phi * ht - tau1 * zt - tau2 * (zt * zt - 1.0)
    return 0, -1, h_arr, z_arr, e_arr


def rg_loglik(double[::1] r, double[::1] x, double h1,
              double omega, double beta, double gamma,
              double xi, double phi, double tau1, double tau2,
              double sigma_eps,
              int dist, double nu, double lam1, double k1,
              double bp, double mu):
    """Joint log-likelihood of the realized-GARCH model, split into the
    return block and the measurement block.  Returns (status, ll_ret,
    ll_meas)."""
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t t
    cdef double ht = h1, hprev, zt, et
    cdef double ll_ret = 0.0, ll_meas = 0.0
    cdef double lam2 = k1 - lam1
    cdef double tconst = 0.0
    cdef double ls = log(sigma_eps), inv2s2 = 0.5 / (sigma_eps * sigma_eps)

    if dist == DIST_STUDENT_T:
        tconst = _t_const(nu)

    with nogil:
        for t in range(n):
            if t > 0:
                ht = omega + beta * hprev + gamma * x[t - 1]
            if not isfinite(ht) or ht <= 0.0:
                with gil:
                    return 1, 0.0, 0.0
            zt = r[t] / sqrt(ht)
            ll_ret += _z_logpdf(zt, dist, tconst, nu, lam1, lam2, k1, bp, mu)
            ll_ret -= 0.5 * log(ht)
            et = x[t] - xi - phi * ht - tau1 * zt - tau2 * (zt * zt - 1.0)
            ll_meas += -0.5 * LOG2PI - ls - et * et * inv2s2
            hprev = ht

    if not (isfinite(ll_ret) and isfinite(ll_meas)):
        # -inf / NaN mean the density vanished (e.g. a Weibull power
        # overflowed for an extreme parameter proposal): reject, not error
        if ll_ret > 0.0 or ll_meas > 0.0:
            return 2, ll_ret, ll_meas
        return 1, 0.0, 0.0
    return 0, ll_ret, ll_meas


def garch_loglik(double[::1] r, double h1,
                 double omega, double alpha, double beta,
                 int dist, double nu, double lam1, double k1,
                 double bp, double mu):
    """GARCH(1,1) return log-likelihood with the same error-distribution
    codes as rg_loglik.  Returns (status, ll)."""
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t t
    cdef double ht = h1, zt
    cdef double ll = 0.0
    cdef double lam2 = k1 - lam1
    cdef double tconst = 0.0

    if dist == DIST_STUDENT_T:
        tconst = _t_const(nu)

    with nogil:
        for t in range(n):
            if t > 0:
                ht = omega + alpha * r[t - 1] * r[t - 1] + beta * ht
            if not isfinite(ht) or ht <= 0.0:
                with gil:
                    return 1, 0.0
            zt = r[t] / sqrt(ht)
            ll += _z_logpdf(zt, dist, tconst, nu, lam1, lam2, k1, bp, mu)
            ll -= 0.5 * log(ht)

    if not isfinite(ll):
        if ll > 0.0:
            return 2, ll
        return 1, 0.0
    return 0, ll
