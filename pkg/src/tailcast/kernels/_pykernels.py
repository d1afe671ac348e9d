"""NumPy fallback for the compiled likelihood kernels.

Same signatures and status conventions as _ckernels.  The variance
recursion is the only sequential part and runs through scipy's lfilter;
everything else is vectorized.
"""

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln

LOG2PI = 1.8378770664093453
LOGPDF_FLOOR = -690.77552789821368  # log(1e-300)

DIST_NORMAL = 0
DIST_STUDENT_T = 1
DIST_TW = 2


def _h_recursion(x, h1, omega, beta, gamma):
    n = x.shape[0]
    h = np.empty(n)
    h[0] = h1
    if n > 1:
        drive = omega + gamma * x[:-1]
        h[1:] = lfilter([1.0], [1.0, -beta], drive, zi=np.array([beta * h1]))[0]
    return h


def _tw_logpdf_vec(u, lam1, lam2, k1, bp):
    out = np.full(u.shape, LOGPDF_FLOOR)
    neg = u < 0
    if np.any(neg):
        lt = np.log(-bp * u[neg] / lam1)
        out[neg] = np.log(bp) + (k1 - 1.0) * lt - np.exp(k1 * lt)
    pos = u > 0
    if np.any(pos) and lam2 > 0:
        lt = np.log(bp * u[pos] / lam2)
        out[pos] = np.log(bp) + (k1 - 1.0) * lt - np.exp(k1 * lt)
    if k1 == 1.0:
        out[u == 0] = np.log(bp)
    return out


def _z_logpdf_vec(z, dist, nu, lam1, k1, bp, mu):
    if dist == DIST_NORMAL:
        return -0.5 * LOG2PI - 0.5 * z * z
    if dist == DIST_STUDENT_T:
        tconst = (
            gammaln(0.5 * (nu + 1.0))
            - gammaln(0.5 * nu)
            - 0.5 * np.log((nu - 2.0) * np.pi)
        )
        return tconst - 0.5 * (nu + 1.0) * np.log(1.0 + z * z / (nu - 2.0))
    return _tw_logpdf_vec(z + mu, lam1, k1 - lam1, k1, bp)


def rg_filter(r, x, h1, omega, beta, gamma, xi, phi, tau1, tau2):
    r = np.ascontiguousarray(r, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    h = _h_recursion(x, h1, omega, beta, gamma)
    bad = ~np.isfinite(h)
    if np.any(bad):
        t = int(np.argmax(bad))
        return 2, t, h, np.empty(0), np.empty(0)
    nonpos = h <= 0
    if np.any(nonpos):
        t = int(np.argmax(nonpos))
        return 1, t, h, np.empty(0), np.empty(0)
    z = r / np.sqrt(h)
    eps = x - xi - phi * h - tau1 * z - tau2 * (z * z - 1.0)
    return 0, -1, h, z, eps


def rg_loglik(r, x, h1, omega, beta, gamma, xi, phi, tau1, tau2, sigma_eps,
              dist, nu, lam1, k1, bp, mu):
    status, _, h, z, eps = rg_filter(r, x, h1, omega, beta, gamma, xi, phi,
                                     tau1, tau2)
    if status != 0:
        return 1, 0.0, 0.0
    n = r.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        ll_ret = float(np.sum(_z_logpdf_vec(z, dist, nu, lam1, k1, bp, mu))
                       - 0.5 * np.sum(np.log(h)))
        ll_meas = float(
            -0.5 * n * LOG2PI
            - n * np.log(sigma_eps)
            - np.sum(eps * eps) * (0.5 / (sigma_eps * sigma_eps))
        )
    if not (np.isfinite(ll_ret) and np.isfinite(ll_meas)):
        # -inf / NaN mean the density vanished (e.g. a Weibull power
        # overflowed for an extreme parameter proposal): reject, not error
        if ll_ret > 0.0 or ll_meas > 0.0:
            return 2, ll_ret, ll_meas
        return 1, 0.0, 0.0
    return 0, ll_ret, ll_meas


def garch_loglik(r, h1, omega, alpha, beta, dist, nu, lam1, k1, bp, mu):
    r = np.ascontiguousarray(r, dtype=float)
    n = r.shape[0]
    h = np.empty(n)
    h[0] = h1
    if n > 1:
        drive = omega + alpha * r[:-1] ** 2
        h[1:] = lfilter([1.0], [1.0, -beta], drive, zi=np.array([beta * h1]))[0]
    if np.any(~np.isfinite(h)) or np.any(h <= 0):
        return 1, 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        z = r / np.sqrt(h)
        ll = float(np.sum(_z_logpdf_vec(z, dist, nu, lam1, k1, bp, mu))
                   - 0.5 * np.sum(np.log(h)))
    if not np.isfinite(ll):
        if ll > 0.0:
            return 2, ll
        return 1, 0.0
    return 0, ll
