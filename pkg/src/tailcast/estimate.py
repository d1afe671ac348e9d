"""Adaptive epoch-based block MCMC and maximum-likelihood estimation.

The sampler targets a posterior proportional to exp(loglik) times a flat
prior over the constraint region (the log-likelihood callable returns
-inf outside it).  Burn-in runs in epochs of random-walk Metropolis
updates, block by block, proposing from an equal-weight mixture of three
Gaussians whose covariances are the block covariance scaled by
(1, 100, 0.01).  At each epoch end the block covariances are re-estimated
from the post-discard draws and the epoch-to-epoch change in posterior
standard deviations decides convergence; a final epoch then runs
independence Metropolis-Hastings from the last epoch's moments.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize

from .errors import InputError

MIXTURE_SCALES = (1.0, 100.0, 0.01)


def target_rate(block_dim):
    """Roberts-Gelman-Gilks target acceptance rate for a block."""
    if block_dim == 1:
        return 0.44
    if block_dim <= 4:
        return 0.35
    return 0.234


@dataclass
class McmcConfig:
    epoch_len: int = 20000
    epoch_discard: int = 2000
    final_len: int = 10000
    stop_threshold: float = 0.10
    max_epochs: int = 8
    mixture_scales: tuple = MIXTURE_SCALES
    seed: int = 0
    # pre-burn-in mode hunt: short disposable runs from the same start,
    # best end state (by log posterior) seeds epoch 1
    scout_runs: int = 4
    scout_len: int = 1250

    def __post_init__(self):
        if self.epoch_discard >= self.epoch_len:
            raise InputError("epoch_discard must be smaller than epoch_len")
        if self.stop_threshold <= 0:
            raise InputError("stop_threshold must be positive")

    def final_discard(self):
        return self.final_len // 5


def desk_config(seed=0):
    """Shortened chain for rolling windows and replication studies."""
    return McmcConfig(epoch_len=5000, epoch_discard=1000, final_len=2500,
                      seed=seed)


@dataclass
class EpochInfo:
    start: int
    end: int
    kind: str  # "burnin" | "final"
    acceptance: np.ndarray  # per block
    steps: np.ndarray  # per-block scalar step at epoch end


@dataclass
class Chain:
    draws: np.ndarray  # iterations x dim
    logposts: np.ndarray
    accepts: np.ndarray  # iterations x n_blocks (bool)
    block_map: list
    epochs: list
    param_names: list = None

    @property
    def final_start(self):
        return self.epochs[-1].start

    @property
    def dim(self):
        return self.draws.shape[1]

    def acceptance_rates(self):
        return np.array([e.acceptance for e in self.epochs])


def _ridged_chol(cov):
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = cov.shape[0]
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        ridge = max(1e-8 * np.trace(cov) / d, 1e-12)
        return np.linalg.cholesky(cov + ridge * np.eye(d))


def _mixture_logpdf(v, mean, chol, scales):
    """Log-density of the equal-weight Gaussian scale mixture."""
    d = v.shape[0]
    y = solve_triangular(chol, v - mean, lower=True)
    quad = float(y @ y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    parts = [
        -0.5 * quad / c - 0.5 * d * math.log(c) - 0.5 * logdet
        - 0.5 * d * math.log(2.0 * math.pi)
        for c in scales
    ]
    m = max(parts)
    return m + math.log(sum(math.exp(p - m) for p in parts)) - math.log(len(scales))


def _sd_change(prev_sd, sd):
    """Mean absolute relative change of per-parameter standard deviations."""
    rel = np.where(
        prev_sd > 0,
        np.abs(sd - prev_sd) / np.where(prev_sd > 0, prev_sd, 1.0),
        np.where(sd == 0, 0.0, 1.0),
    )
    return float(rel.mean())


def _scout(loglik_fn, init, ll_init, blocks, rng, config):
    """One disposable warm-up run; returns its best (theta, loglik).

    The likelihood surface has degenerate local modes (volatility
    feedback switched off); a block random-walk launched from a generic
    start can commit to one.  Racing a few independent short runs and
    keeping the best end state makes the burn-in start in the deepest
    basin found.
    """
    scales = tuple(config.mixture_scales)
    sqrt_scales = np.sqrt(np.asarray(scales))
    chols = [np.sqrt(2.38 / np.sqrt(b.size)) * np.eye(b.size) for b in blocks]
    steps = np.ones(len(blocks))
    targets = [target_rate(b.size) for b in blocks]
    theta = init.copy()
    ll = ll_init
    best_theta, best_ll = theta, ll
    for it in range(config.scout_len):
        for bi, b in enumerate(blocks):
            comp = int(rng.integers(0, len(scales)))
            noise = rng.standard_normal(b.size)
            prop = theta.copy()
            prop[b] = theta[b] + steps[bi] * sqrt_scales[comp] * (chols[bi] @ noise)
            ll_prop = loglik_fn(prop)
            if np.isfinite(ll_prop):
                acc_prob = math.exp(min(0.0, ll_prop - ll))
            else:
                acc_prob = 0.0
            if rng.random() < acc_prob:
                theta = prop
                ll = ll_prop
            steps[bi] *= math.exp((acc_prob - targets[bi]) / (it + 1) ** 0.6)
        if ll > best_ll:
            best_theta, best_ll = theta, ll
    return best_theta, best_ll


def mcmc_estimate(loglik_fn, init, config: McmcConfig, blocks=None,
                  param_names=None) -> Chain:
    """Run the adaptive epoch sampler; returns the full chain with epoch
    boundaries marked.  Deterministic given config.seed."""
    theta = np.array(init, dtype=float)
    dim = theta.shape[0]
    if blocks is None:
        blocks = [np.arange(dim)]
    blocks = [np.asarray(b, dtype=int) for b in blocks]
    nb = len(blocks)
    ll = loglik_fn(theta)
    if not np.isfinite(ll):
        raise InputError("initial parameter vector violates the constraints")

    rng = np.random.default_rng(config.seed)
    scales = tuple(config.mixture_scales)
    sqrt_scales = np.sqrt(np.asarray(scales))
    targets = [target_rate(b.size) for b in blocks]

    if config.scout_runs > 0:
        cand = [_scout(loglik_fn, theta, ll, blocks, rng, config)
                for _ in range(config.scout_runs)]
        theta, ll = max(cand, key=lambda c: c[1])
        theta = theta.copy()

    # initial proposal covariance (2.38 / sqrt(d)) * I per block
    chols = [np.sqrt(2.38 / np.sqrt(b.size)) * np.eye(b.size) for b in blocks]
    steps = np.ones(nb)

    total_max = config.max_epochs * config.epoch_len + config.final_len
    draws = np.empty((total_max, dim))
    logposts = np.empty(total_max)
    accepts = np.zeros((total_max, nb), dtype=bool)
    epochs = []
    pos = 0

    prev_sd = None
    converged = False
    last_body = None
    while len(epochs) < config.max_epochs and not converged:
        start = pos
        acc_count = np.zeros(nb)
        for it in range(config.epoch_len):
            for bi, b in enumerate(blocks):
                comp = int(rng.integers(0, len(scales)))
                noise = rng.standard_normal(b.size)
                prop = theta.copy()
                prop[b] = theta[b] + steps[bi] * sqrt_scales[comp] * (chols[bi] @ noise)
                ll_prop = loglik_fn(prop)
                if np.isfinite(ll_prop):
                    acc_prob = math.exp(min(0.0, ll_prop - ll))
                else:
                    acc_prob = 0.0
                if rng.random() < acc_prob:
                    theta = prop
                    ll = ll_prop
                    accepts[pos, bi] = True
                    acc_count[bi] += 1
                # Robbins-Monro tuning of the scalar step toward the target
                steps[bi] *= math.exp((acc_prob - targets[bi]) / (it + 1) ** 0.6)
            draws[pos] = theta
            logposts[pos] = ll
            pos += 1
        epochs.append(EpochInfo(start=start, end=pos, kind="burnin",
                                acceptance=acc_count / config.epoch_len,
                                steps=steps.copy()))
        body = draws[start + config.epoch_discard: pos]
        sd = body.std(axis=0, ddof=1)
        if prev_sd is not None and _sd_change(prev_sd, sd) < config.stop_threshold:
            converged = True
        prev_sd = sd
        last_body = body
        # refresh block covariances; reset the step to the RGG-optimal scale
        for bi, b in enumerate(blocks):
            cov = np.cov(body[:, b].T, ddof=1)
            chols[bi] = _ridged_chol(cov)
            steps[bi] = 2.38 / np.sqrt(b.size)

    # final epoch: independence MH around the last epoch's moments;
    # proposal parameters are frozen from here on
    means = [last_body[:, b].mean(axis=0) for b in blocks]
    chols_f = [_ridged_chol(np.cov(last_body[:, b].T, ddof=1)) for b in blocks]
    start = pos
    acc_count = np.zeros(nb)
    lq_cur = [_mixture_logpdf(theta[b], means[bi], chols_f[bi], scales)
              for bi, b in enumerate(blocks)]
    for _ in range(config.final_len):
        for bi, b in enumerate(blocks):
            comp = int(rng.integers(0, len(scales)))
            noise = rng.standard_normal(b.size)
            prop_b = means[bi] + sqrt_scales[comp] * (chols_f[bi] @ noise)
            prop = theta.copy()
            prop[b] = prop_b
            ll_prop = loglik_fn(prop)
            if np.isfinite(ll_prop):
                lq_prop = _mixture_logpdf(prop_b, means[bi], chols_f[bi], scales)
                log_ratio = (ll_prop + lq_cur[bi]) - (ll + lq_prop)
                acc_prob = math.exp(min(0.0, log_ratio))
            else:
                acc_prob = 0.0
            if rng.random() < acc_prob:
                theta = prop
                ll = ll_prop
                lq_cur[bi] = lq_prop
                accepts[pos, bi] = True
                acc_count[bi] += 1
        draws[pos] = theta
        logposts[pos] = ll
        pos += 1
    epochs.append(EpochInfo(start=start, end=pos, kind="final",
                            acceptance=acc_count / config.final_len,
                            steps=steps.copy()))

    return Chain(draws=draws[:pos].copy(), logposts=logposts[:pos].copy(),
                 accepts=accepts[:pos].copy(), block_map=blocks,
                 epochs=epochs, param_names=param_names)


@dataclass
class PointEstimate:
    theta: np.ndarray
    sd: np.ndarray
    lo: np.ndarray  # 2.5 percentile
    hi: np.ndarray  # 97.5 percentile
    n_retained: int


def posterior_point(chain: Chain, discard) -> PointEstimate:
    """Post-discard mean (and spread) of the final epoch."""
    final = chain.epochs[-1]
    body = chain.draws[final.start + discard: final.end]
    if body.shape[0] < 100:
        raise InputError(
            f"only {body.shape[0]} retained draws; need at least 100"
        )
    return PointEstimate(
        theta=body.mean(axis=0),
        sd=body.std(axis=0, ddof=1),
        lo=np.percentile(body, 2.5, axis=0),
        hi=np.percentile(body, 97.5, axis=0),
        n_retained=body.shape[0],
    )


@dataclass
class MlResult:
    theta: np.ndarray
    loglik: float
    n_evals: int
    improved: bool
    warning: str = None


def ml_estimate(loglik_fn, init, max_evals=5000, f_tol=1e-8) -> MlResult:
    """Derivative-free maximization with a hard penalty outside the
    constraint region; falls back to the initial point on non-improvement."""
    init = np.array(init, dtype=float)
    ll0 = loglik_fn(init)
    if not np.isfinite(ll0):
        raise InputError("initial parameter vector violates the constraints")

    def neg(th):
        v = loglik_fn(th)
        return 1e10 if not np.isfinite(v) else -v

    res = minimize(neg, init, method="Nelder-Mead",
                   options=dict(maxfev=max_evals, maxiter=max_evals,
                                fatol=f_tol, xatol=1e-8))
    theta = np.asarray(res.x, dtype=float)
    ll = -float(res.fun)
    if not np.isfinite(loglik_fn(theta)) or ll < ll0:
        return MlResult(theta=init, loglik=ll0, n_evals=res.nfev,
                        improved=False, warning="optimizer failed to improve")
    if ll == ll0:
        return MlResult(theta=theta, loglik=ll, n_evals=res.nfev,
                        improved=False, warning="no improvement from init")
    return MlResult(theta=theta, loglik=ll, n_evals=res.nfev, improved=True)


def blocks_from_names(names):
    """Standard block partition: volatility-equation block, measurement
    block, distribution block (whichever are present)."""
    groups = (
        {"omega", "beta", "gamma", "phi", "alpha"},
        {"xi", "tau1", "tau2", "sigma_eps"},
        {"nu", "lambda1", "k1"},
    )
    blocks = []
    for g in groups:
        idx = [i for i, n in enumerate(names) if n in g]
        if idx:
            blocks.append(np.asarray(idx, dtype=int))
    covered = {i for b in blocks for i in b}
    if covered != set(range(len(names))):
        raise InputError(f"unblocked parameters in {names}")
    return blocks
