"""Realized-GARCH model: state recursion, likelihoods and simulation.

The model couples a return equation r_t = sqrt(h_t) z_t, a variance
recursion h_t = omega + beta h_{t-1} + gamma x_{t-1}, and a measurement
equation x_t = xi + phi h_t + tau1 z_t + tau2 (z_t^2 - 1) + sigma_eps e_t
linking the latent variance to an observed realized measure x_t.

Return errors z_t come in three flavors: standard normal, standardized
Student-t, or the mean-zero shifted two-sided Weibull; the measurement
error is always Gaussian.  A plain GARCH(1,1) likelihood over the same
error menu is included as a forecasting baseline.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from . import kernels, stw
from .errors import InputError, NumericalError, ParameterError

LOGLIK_REJECT = -np.inf  # sentinel for parameter vectors outside the region


# ---------------------------------------------------------------------------
# return-error distributions

class NormalError:
    """Standard normal return error."""

    name = "GG"
    code = kernels.DIST_NORMAL
    param_names = ()

    def params_tuple(self):
        return (0.0, 0.0, 0.0, 0.0, 0.0)

    def validate(self):
        return True

    def quantile(self, alpha):
        return sps.norm.ppf(alpha)

    def cdf(self, z):
        return sps.norm.cdf(z)

    def tail_mean(self, alpha):
        # E[z | z < q_alpha] for the standard normal
        q = sps.norm.ppf(alpha)
        return -sps.norm.pdf(q) / alpha

    def logpdf(self, z):
        return sps.norm.logpdf(z)

    def sample(self, rng, size=None):
        return rng.standard_normal(size)


class StudentTError:
    """Student-t return error standardized to unit variance (nu > 2)."""

    name = "tG"
    code = kernels.DIST_STUDENT_T
    param_names = ("nu",)

    def __init__(self, nu):
        self.nu = float(nu)

    def params_tuple(self):
        return (self.nu, 0.0, 0.0, 0.0, 0.0)

    def validate(self):
        return 2.0 < self.nu <= 100.0

    def _scale(self):
        return np.sqrt((self.nu - 2.0) / self.nu)

    def quantile(self, alpha):
        return sps.t.ppf(alpha, self.nu) * self._scale()

    def cdf(self, z):
        return sps.t.cdf(np.asarray(z) / self._scale(), self.nu)

    def tail_mean(self, alpha):
        nu = self.nu
        q = sps.t.ppf(alpha, nu)
        # E[T | T < q] for raw t, then rescale to unit variance
        raw = -sps.t.pdf(q, nu) * (nu + q * q) / ((nu - 1.0) * alpha)
        return raw * self._scale()

    def logpdf(self, z):
        s = 1.0 / self._scale()
        return sps.t.logpdf(np.asarray(z) * s, self.nu) + np.log(s)

    def sample(self, rng, size=None):
        return rng.standard_t(self.nu, size) * self._scale()


class TwError:
    """Mean-zero shifted two-sided Weibull return error."""

    name = "TWG"
    code = kernels.DIST_TW
    param_names = ("lambda1", "k1")

    def __init__(self, lambda1, k1):
        self.lambda1 = float(lambda1)
        self.k1 = float(k1)
        self._stw = None
        if 0.0 < self.lambda1 <= self.k1:
            try:
                self._stw = stw.StwParams(self.lambda1, self.k1)
            except ParameterError:
                self._stw = None

    @property
    def stw_params(self):
        if self._stw is None:
            raise ParameterError(
                f"invalid two-sided Weibull parameters "
                f"lambda1={self.lambda1}, k1={self.k1}"
            )
        return self._stw

    def params_tuple(self):
        p = self.stw_params
        return (0.0, p.lambda1, p.k1, p.bp, p.mu_x)

    def validate(self):
        return self._stw is not None

    def quantile(self, alpha):
        p = self.stw_params
        return stw.quantile(alpha, p) - p.mu_x

    def cdf(self, z):
        p = self.stw_params
        return stw.cdf(np.asarray(z) + p.mu_x, p)

    def tail_mean(self, alpha):
        p = self.stw_params
        return stw.es(alpha, p) - p.mu_x

    def logpdf(self, z):
        p = self.stw_params
        return stw.logpdf(np.asarray(z) + p.mu_x, p)

    def sample(self, rng, size=None):
        p = self.stw_params
        return stw.sample(p, rng, size) - p.mu_x


_DIST_BY_NAME = {"GG": NormalError, "tG": StudentTError, "TWG": TwError}


def make_dist(name, *args):
    try:
        cls = _DIST_BY_NAME[name]
    except KeyError:
        raise InputError(f"unknown error distribution {name!r}") from None
    return cls(*args)


# ---------------------------------------------------------------------------
# parameter containers

@dataclass
class RgParams:
    """Realized-GARCH coefficients plus the return-error choice."""

    omega: float
    beta: float
    gamma: float
    xi: float
    phi: float
    tau1: float
    tau2: float
    sigma_eps: float
    dist: object  # NormalError | StudentTError | TwError

    def is_valid(self):
        p = self
        return (
            p.omega > 0
            and p.beta > 0
            and p.gamma > 0
            and p.sigma_eps > 0
            and p.omega + p.gamma * p.xi > 0
            and 0.0 < p.beta + p.gamma * p.phi < 1.0
            and p.dist.validate()
        )

    def stationary_mean_h(self):
        return (self.omega + self.gamma * self.xi) / (
            1.0 - self.beta - self.gamma * self.phi
        )

    def to_vector(self):
        base = [self.omega, self.beta, self.gamma]
        extra = [getattr(self.dist, n) for n in self.dist.param_names]
        tail = [self.xi, self.phi, self.tau1, self.tau2, self.sigma_eps]
        return np.array(base + extra + tail)

    @classmethod
    def vector_names(cls, dist_name):
        mid = {"GG": [], "tG": ["nu"], "TWG": ["lambda1", "k1"]}[dist_name]
        return ["omega", "beta", "gamma"] + mid + [
            "xi", "phi", "tau1", "tau2", "sigma_eps",
        ]

    @classmethod
    def from_vector(cls, theta, dist_name):
        theta = np.asarray(theta, dtype=float)
        names = cls.vector_names(dist_name)
        if theta.shape[0] != len(names):
            raise InputError(
                f"{dist_name} expects {len(names)} parameters, got {theta.shape[0]}"
            )
        kv = dict(zip(names, theta))
        dist = make_dist(dist_name, *(kv[n] for n in
                                      _DIST_BY_NAME[dist_name].param_names))
        return cls(kv["omega"], kv["beta"], kv["gamma"], kv["xi"], kv["phi"],
                   kv["tau1"], kv["tau2"], kv["sigma_eps"], dist)

    def to_json(self):
        d = {n: v for n, v in zip(self.vector_names(self.dist.name),
                                  self.to_vector())}
        d["dist"] = self.dist.name
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        name = d.pop("dist")
        theta = [d[n] for n in cls.vector_names(name)]
        return cls.from_vector(theta, name)


@dataclass
class FilterState:
    """Output of the variance recursion."""

    h: np.ndarray
    z: np.ndarray
    eps: np.ndarray


def model1_params():
    """Built-in simulation benchmark configuration (two-sided Weibull
    errors, persistence near one)."""
    return RgParams(
        omega=0.02, beta=0.75, gamma=0.25, xi=0.10, phi=0.95,
        tau1=-0.02, tau2=0.02, sigma_eps=0.50, dist=TwError(0.6, 1.1),
    )


# ---------------------------------------------------------------------------
# filtering and likelihoods

def default_h1(r):
    """Data-driven start: sample variance of the first 50 returns."""
    r = np.asarray(r, dtype=float)
    head = r[: min(50, r.shape[0])]
    if head.shape[0] < 2:
        raise InputError("need at least 2 returns to initialize h1")
    v = float(np.var(head, ddof=1))
    if not v > 0:
        raise InputError("degenerate returns: zero variance in warm-up window")
    return v


def _check_aligned(r, x):
    r = np.ascontiguousarray(r, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    if r.shape != x.shape or r.ndim != 1 or r.shape[0] == 0:
        raise InputError("returns and measure must be aligned 1-d vectors")
    return r, x


def rg_filter(params: RgParams, r, x, h1=None) -> FilterState:
    """Run the variance recursion; raises on non-finite intermediates."""
    r, x = _check_aligned(r, x)
    if h1 is None:
        h1 = default_h1(r)
    if not h1 > 0:
        raise InputError("h1 must be positive")
    status, bad, h, z, eps = kernels.rg_filter(
        r, x, float(h1), params.omega, params.beta, params.gamma,
        params.xi, params.phi, params.tau1, params.tau2,
    )
    if status == 2:
        raise NumericalError(f"non-finite variance at index t={bad}")
    if status == 1:
        raise NumericalError(f"nonpositive variance at index t={bad}")
    return FilterState(h=h, z=z, eps=eps)


def rg_loglik_parts(params: RgParams, r, x, h1=None):
    """(return block, measurement block) of the log-likelihood, or the
    rejection sentinel pair if the parameters violate the constraints."""
    r, x = _check_aligned(r, x)
    if not params.is_valid():
        return LOGLIK_REJECT, LOGLIK_REJECT
    if h1 is None:
        h1 = default_h1(r)
    nu, lam1, k1, bp, mu = params.dist.params_tuple()
    status, ll_ret, ll_meas = kernels.rg_loglik(
        r, x, float(h1), params.omega, params.beta, params.gamma,
        params.xi, params.phi, params.tau1, params.tau2, params.sigma_eps,
        params.dist.code, nu, lam1, k1, bp, mu,
    )
    if status == 1:
        # nonpositive variance can only happen with negative measure values
        return LOGLIK_REJECT, LOGLIK_REJECT
    if status == 2:
        raise NumericalError("non-finite log-likelihood")
    return ll_ret, ll_meas


def rg_loglik(params: RgParams, r, x, h1=None):
    ll_ret, ll_meas = rg_loglik_parts(params, r, x, h1)
    return ll_ret + ll_meas


def simulate_rg(params: RgParams, n, rng, h1=None):
    """Simulate (returns, measure, variance) paths of length n.

    The recursion is seeded at the stationary mean of h unless h1 is
    given; shocks are drawn mean-zero so Var(r_t | h_t) = h_t.  The
    measurement noise can push x below zero in low-variance regimes;
    a realized measure is nonnegative by construction, so x is clamped
    at 0 (which also keeps the variance recursion positive).
    """
    if not params.is_valid():
        raise ParameterError("cannot simulate from an invalid parameter vector")
    if n < 1:
        raise InputError("n must be >= 1")
    if h1 is None:
        h1 = params.stationary_mean_h()
    z = params.dist.sample(rng, n)
    e = rng.standard_normal(n)
    h = np.empty(n)
    x = np.empty(n)
    ht = float(h1)
    for t in range(n):
        if t > 0:
            ht = params.omega + params.beta * h[t - 1] + params.gamma * x[t - 1]
        if not ht > 0:
            raise NumericalError(f"simulated variance nonpositive at t={t}")
        h[t] = ht
        xt = (params.xi + params.phi * ht + params.tau1 * z[t]
              + params.tau2 * (z[t] ** 2 - 1.0) + params.sigma_eps * e[t])
        x[t] = xt if xt > 0.0 else 0.0
    r = np.sqrt(h) * z
    return r, x, h


def simulate_model1(params: RgParams, n, rng):
    """Benchmark-model simulation; returns the (r, x) pair."""
    r, x, _ = simulate_rg(params, n, rng)
    return r, x


# ---------------------------------------------------------------------------
# GARCH(1,1) baselines

@dataclass
class GarchParams:
    """GARCH(1,1) coefficients plus the return-error choice."""

    omega: float
    alpha: float
    beta: float
    dist: object

    def is_valid(self):
        return (
            self.omega > 0
            and self.alpha >= 0
            and self.beta >= 0
            and self.alpha + self.beta < 1.0
            and self.dist.validate()
        )

    def to_vector(self):
        extra = [getattr(self.dist, n) for n in self.dist.param_names]
        return np.array([self.omega, self.alpha, self.beta] + extra)

    @classmethod
    def vector_names(cls, dist_name):
        return ["omega", "alpha", "beta"] + list(
            _DIST_BY_NAME[dist_name].param_names
        )

    @classmethod
    def from_vector(cls, theta, dist_name):
        theta = np.asarray(theta, dtype=float)
        names = cls.vector_names(dist_name)
        if theta.shape[0] != len(names):
            raise InputError(
                f"{dist_name} GARCH expects {len(names)} parameters"
            )
        dist = make_dist(dist_name, *theta[3:])
        return cls(theta[0], theta[1], theta[2], dist)


def garch_filter_h(params: GarchParams, r, h1=None):
    r = np.ascontiguousarray(r, dtype=float)
    if h1 is None:
        h1 = default_h1(r)
    n = r.shape[0]
    h = np.empty(n)
    h[0] = float(h1)
    for t in range(1, n):
        h[t] = params.omega + params.alpha * r[t - 1] ** 2 + params.beta * h[t - 1]
    return h


def garch_loglik(params: GarchParams, r, h1=None):
    r = np.ascontiguousarray(r, dtype=float)
    if not params.is_valid():
        return LOGLIK_REJECT
    if h1 is None:
        h1 = default_h1(r)
    nu, lam1, k1, bp, mu = params.dist.params_tuple()
    status, ll = kernels.garch_loglik(
        r, float(h1), params.omega, params.alpha, params.beta,
        params.dist.code, nu, lam1, k1, bp, mu,
    )
    if status == 1:
        return LOGLIK_REJECT
    if status == 2:
        raise NumericalError("non-finite GARCH log-likelihood")
    return ll


# ---------------------------------------------------------------------------
# raw-vector likelihood closures (hot path for MCMC / ML)

def make_rg_loglik_fn(r, x, dist_name, h1=None):
    """Closure mapping a raw parameter vector to the realized-GARCH
    log-likelihood, with the rejection sentinel outside the constraint
    region.  Avoids per-call object construction."""
    r, x = _check_aligned(r, x)
    if h1 is None:
        h1 = default_h1(r)
    h1 = float(h1)
    code = _DIST_BY_NAME[dist_name].code
    n_dist = len(_DIST_BY_NAME[dist_name].param_names)
    kern = kernels.rg_loglik

    def loglik(theta):
        omega, beta, gamma = theta[0], theta[1], theta[2]
        xi, phi, tau1, tau2, sigma_eps = theta[3 + n_dist:]
        if not (omega > 0 and beta > 0 and gamma > 0 and sigma_eps > 0
                and omega + gamma * xi > 0
                and 0.0 < beta + gamma * phi < 1.0):
            return LOGLIK_REJECT
        nu = lam1 = k1 = bp = mu = 0.0
        if code == kernels.DIST_STUDENT_T:
            nu = theta[3]
            if not 2.0 < nu <= 100.0:
                return LOGLIK_REJECT
        elif code == kernels.DIST_TW:
            lam1, k1 = theta[3], theta[4]
            if not 0.0 < lam1 <= k1:
                return LOGLIK_REJECT
            try:
                bp, mu = stw._bp_mu(lam1, k1)
            except ParameterError:
                return LOGLIK_REJECT
        status, ll_ret, ll_meas = kern(
            r, x, h1, omega, beta, gamma, xi, phi, tau1, tau2, sigma_eps,
            code, nu, lam1, k1, bp, mu,
        )
        if status == 1:
            return LOGLIK_REJECT
        if status == 2:
            raise NumericalError("non-finite log-likelihood")
        return ll_ret + ll_meas

    return loglik


def make_garch_loglik_fn(r, dist_name, h1=None):
    """Raw-vector GARCH(1,1) log-likelihood closure (baselines)."""
    r = np.ascontiguousarray(r, dtype=float)
    if h1 is None:
        h1 = default_h1(r)
    h1 = float(h1)
    code = _DIST_BY_NAME[dist_name].code
    kern = kernels.garch_loglik

    def loglik(theta):
        omega, alpha, beta = theta[0], theta[1], theta[2]
        if not (omega > 0 and alpha >= 0 and beta >= 0 and alpha + beta < 1.0):
            return LOGLIK_REJECT
        nu = lam1 = k1 = bp = mu = 0.0
        if code == kernels.DIST_STUDENT_T:
            nu = theta[3]
            if not 2.0 < nu <= 100.0:
                return LOGLIK_REJECT
        elif code == kernels.DIST_TW:
            lam1, k1 = theta[3], theta[4]
            if not 0.0 < lam1 <= k1:
                return LOGLIK_REJECT
            try:
                bp, mu = stw._bp_mu(lam1, k1)
            except ParameterError:
                return LOGLIK_REJECT
        status, ll = kern(r, h1, omega, alpha, beta, code, nu, lam1, k1, bp, mu)
        if status == 1:
            return LOGLIK_REJECT
        if status == 2:
            raise NumericalError("non-finite GARCH log-likelihood")
        return ll

    return loglik


def simulate_garch(params: GarchParams, n, rng, h1=None):
    if not params.is_valid():
        raise ParameterError("cannot simulate from an invalid parameter vector")
    if h1 is None:
        h1 = params.omega / (1.0 - params.alpha - params.beta)
    z = params.dist.sample(rng, n)
    h = np.empty(n)
    r = np.empty(n)
    h[0] = float(h1)
    for t in range(n):
        if t > 0:
            h[t] = params.omega + params.alpha * r[t - 1] ** 2 + params.beta * h[t - 1]
        r[t] = np.sqrt(h[t]) * z[t]
    return r, h
