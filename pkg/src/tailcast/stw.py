"""Standardized two-sided Weibull (TW) distribution.

A two-sided Weibull random variable Y has Weibull(lambda1, k1) tails for
-Y on the negative axis and Weibull(lambda2, k2) tails on the positive
axis.  The density integrates to one iff lambda1/k1 + lambda2/k2 = 1; we
fix k2 = k1 so the family has two free parameters (lambda1, k1) with
lambda2 = k1 - lambda1 and Pr(X < 0) = lambda1/k1.

The standardized variable is X = Y / sd(Y), so Var(X) = 1; subtracting
mu_X = E[X] gives the mean-zero, unit-variance shock used as a GARCH
return error.  Density, CDF, quantile, lower-tail expectation, moments
and inverse-transform sampling are provided, all vectorized over x.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc, gammaln

from .errors import ParameterError

# log-density assigned where the density is 0 or undefined (keeps
# likelihoods finite on measure-zero / boundary events)
LOGPDF_FLOOR = float(np.log(1e-300))


def upper_inc_gamma(s, x):
    """Upper incomplete gamma integral of t^(s-1) e^(-t) from x to infinity."""
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(s <= 0):
        raise ParameterError("upper_inc_gamma requires s > 0")
    if np.any(x < 0):
        raise ParameterError("upper_inc_gamma requires x >= 0")
    out = gammaincc(s, x) * np.exp(gammaln(s))
    return float(out) if out.ndim == 0 else out


def _bp_mu(lambda1, k1):
    """Scale sd(Y) and standardized mean E[X] for the two-sided Weibull."""
    lambda2 = k1 - lambda1
    g2 = math.gamma(1.0 + 2.0 / k1)
    g1 = math.gamma(1.0 + 1.0 / k1)
    ey2 = (lambda1**3 + lambda2**3) / k1 * g2
    ey = (-(lambda1**2) + lambda2**2) / k1 * g1
    var_y = ey2 - ey**2
    if not var_y > 0:
        raise ParameterError(f"two-sided Weibull variance not positive: {var_y}")
    bp = math.sqrt(var_y)
    return bp, ey / bp


@dataclass(frozen=True)
class StwParams:
    """Parameters (lambda1, k1) with the derived quantities cached.

    Constraint: 0 < lambda1 <= k1, which keeps lambda2 = k1 - lambda1
    nonnegative and Pr(X < 0) = lambda1/k1 in (0, 1].
    """

    lambda1: float
    k1: float
    lambda2: float = field(init=False)
    bp: float = field(init=False)
    mu_x: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.lambda1 <= self.k1):
            raise ParameterError(
                f"need 0 < lambda1 <= k1, got lambda1={self.lambda1}, k1={self.k1}"
            )
        bp, mu = _bp_mu(self.lambda1, self.k1)
        object.__setattr__(self, "lambda2", self.k1 - self.lambda1)
        object.__setattr__(self, "bp", bp)
        object.__setattr__(self, "mu_x", mu)

    @property
    def prob_negative(self):
        return self.lambda1 / self.k1


def bp(params: StwParams) -> float:
    """Standard deviation of the unstandardized two-sided Weibull."""
    return params.bp


def mean(params: StwParams) -> float:
    """Mean mu_X of the standardized (but unshifted) variable."""
    return params.mu_x


def logpdf(x, params: StwParams):
    """Log-density of the standardized two-sided Weibull at x.

    x = 0 is a branch point: the density is 0 there for k1 > 1 and the
    left-branch limit log(bp) for k1 = 1; both cases (and the k1 < 1
    singularity) return a finite value so likelihood sums stay usable.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    lam1, lam2, k1, b = params.lambda1, params.lambda2, params.k1, params.bp
    out = np.full(x.shape, LOGPDF_FLOOR)

    neg = x < 0
    if np.any(neg):
        t = -b * x[neg] / lam1
        lt = np.log(t)
        out[neg] = np.log(b) + (k1 - 1.0) * lt - np.exp(k1 * lt)
    pos = x > 0
    if np.any(pos):
        if lam2 > 0:
            t = b * x[pos] / lam2
            lt = np.log(t)
            out[pos] = np.log(b) + (k1 - 1.0) * lt - np.exp(k1 * lt)
        # lambda2 == 0: no mass on the positive axis, keep the floor
    if k1 == 1.0:
        out[x == 0] = np.log(b)
    return float(out[0]) if scalar else out


def pdf(x, params: StwParams):
    return np.exp(logpdf(x, params))


def cdf(x, params: StwParams):
    """Distribution function, assembled from one-sided Weibull survival
    functions weighted by the tail masses lambda1/k1 and lambda2/k1."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    lam1, lam2, k1, b = params.lambda1, params.lambda2, params.k1, params.bp
    out = np.empty(x.shape)

    neg = x < 0
    out[neg] = (lam1 / k1) * np.exp(-((-b * x[neg] / lam1) ** k1))
    pos = ~neg
    if lam2 > 0:
        out[pos] = 1.0 - (lam2 / k1) * np.exp(-((b * x[pos] / lam2) ** k1))
    else:
        out[pos] = 1.0
    return float(out[0]) if scalar else out


def quantile(alpha, params: StwParams):
    """Inverse CDF.  Lower branch applies for alpha < lambda1/k1."""
    alpha = np.asarray(alpha, dtype=float)
    scalar = alpha.ndim == 0
    alpha = np.atleast_1d(alpha)
    if np.any(alpha <= 0) or np.any(alpha >= 1):
        raise ParameterError("quantile level must lie strictly in (0, 1)")
    lam1, lam2, k1, b = params.lambda1, params.lambda2, params.k1, params.bp
    split = lam1 / k1
    out = np.empty(alpha.shape)

    lo = alpha < split
    out[lo] = -(lam1 / b) * (-np.log((k1 / lam1) * alpha[lo])) ** (1.0 / k1)
    hi = ~lo
    if np.any(hi):
        if lam2 > 0:
            out[hi] = (lam2 / b) * (-np.log((k1 / lam2) * (1.0 - alpha[hi]))) ** (
                1.0 / k1
            )
        else:
            out[hi] = 0.0  # all mass at/below 0 when lambda1 == k1
    return float(out[0]) if scalar else out


def es(alpha, params: StwParams):
    """Lower-tail expectation E[X | X < quantile(alpha)].

    Closed form via the upper incomplete gamma function; only defined in
    the negative tail, alpha < lambda1/k1.
    """
    alpha = np.asarray(alpha, dtype=float)
    scalar = alpha.ndim == 0
    alpha = np.atleast_1d(alpha)
    split = params.lambda1 / params.k1
    if np.any(alpha <= 0) or np.any(alpha >= split):
        raise ParameterError(
            f"ES formula valid only in lower tail (0 < alpha < {split:.6g})"
        )
    lam1, k1, b = params.lambda1, params.k1, params.bp
    q = quantile(alpha, params)
    q = np.atleast_1d(q)
    tv = (-b * q / lam1) ** k1
    out = -(lam1**2) / (alpha * b * k1) * upper_inc_gamma(1.0 + 1.0 / k1, tv)
    return float(out[0]) if scalar else out


def sample(params: StwParams, rng: np.random.Generator, size=None):
    """Inverse-transform draws of X (unshifted; subtract mu_x for the
    mean-zero shock)."""
    u = rng.random(size)
    return quantile(u, params)
