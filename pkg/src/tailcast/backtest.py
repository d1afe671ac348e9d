"""Backtests for VaR/ES forecasts and the model confidence set.

Violation-based tests: unconditional coverage (likelihood ratio on the
violation count), independence (first-order Markov transitions),
conditional coverage (their sum), the dynamic quantile regression test,
and a quantile-regression calibration test of (intercept, slope) = (0, 1).
A strictly consistent joint (VaR, ES) scoring function ranks models, and
a moving-block bootstrap model confidence set prunes them.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps
from scipy.special import xlogy

from .errors import InputError, NumericalError

SKIP_FEW_VIOLATIONS = "skipped: insufficient violations"


@dataclass
class ViolationSeries:
    indicators: np.ndarray  # 1 where the return breaches the VaR forecast
    alpha: float

    def __post_init__(self):
        self.indicators = np.asarray(self.indicators, dtype=int)
        if self.indicators.ndim != 1 or self.indicators.shape[0] == 0:
            raise InputError("need a nonempty 1-d indicator vector")
        if not 0 < self.alpha < 1:
            raise InputError("alpha must lie in (0, 1)")

    @property
    def m(self):
        return self.indicators.shape[0]

    @property
    def count(self):
        return int(self.indicators.sum())


def violations(records, alpha=None) -> ViolationSeries:
    alpha = records[0].alpha if alpha is None else alpha
    ind = np.array([r.realized_return < r.var for r in records], dtype=int)
    return ViolationSeries(ind, alpha)


def vrate(records):
    """Proportion of returns breaching the VaR forecasts."""
    if not len(records):
        raise InputError("no forecast records")
    return float(np.mean([r.realized_return < r.var for r in records]))


def esrate(records):
    """Proportion of returns breaching the ES forecasts."""
    if not len(records):
        raise InputError("no forecast records")
    return float(np.mean([r.realized_return < r.es for r in records]))


@dataclass
class TestResult:
    stat: float
    pvalue: float
    df: int
    status: str = "ok"

    @property
    def reject_5pct(self):
        return bool(self.status == "ok" and self.pvalue < 0.05)


def uc_test(v: ViolationSeries) -> TestResult:
    """Unconditional coverage likelihood ratio on the violation count."""
    m, x, a = v.m, v.count, v.alpha
    p_hat = x / m
    # xlogy gives the 0 log 0 = 0 limit for the boundary counts
    ll_null = xlogy(m - x, 1.0 - a) + xlogy(x, a)
    ll_alt = xlogy(m - x, 1.0 - p_hat) + xlogy(x, p_hat)
    stat = float(-2.0 * (ll_null - ll_alt))
    return TestResult(stat, float(sps.chi2.sf(stat, 1)), 1)


def ind_test(v: ViolationSeries) -> TestResult:
    """First-order Markov independence likelihood ratio."""
    ind = v.indicators
    if v.m < 2:
        raise InputError("need at least 2 observations")
    prev, cur = ind[:-1], ind[1:]
    n00 = int(np.sum((prev == 0) & (cur == 0)))
    n01 = int(np.sum((prev == 0) & (cur == 1)))
    n10 = int(np.sum((prev == 1) & (cur == 0)))
    n11 = int(np.sum((prev == 1) & (cur == 1)))
    p01 = n01 / (n00 + n01) if n00 + n01 > 0 else 0.0
    p11 = n11 / (n10 + n11) if n10 + n11 > 0 else 0.0
    p2 = (n01 + n11) / (v.m - 1)
    ll_markov = (xlogy(n00, 1.0 - p01) + xlogy(n01, p01)
                 + xlogy(n10, 1.0 - p11) + xlogy(n11, p11))
    ll_null = xlogy(n00 + n10, 1.0 - p2) + xlogy(n01 + n11, p2)
    stat = float(-2.0 * (ll_null - ll_markov))
    return TestResult(stat, float(sps.chi2.sf(stat, 1)), 1)


def cc_test(v: ViolationSeries) -> TestResult:
    """Conditional coverage: UC + IND against chi-square(2)."""
    stat = uc_test(v).stat + ind_test(v).stat
    return TestResult(stat, float(sps.chi2.sf(stat, 2)), 2)


def dq_design(indicators, var_series, alpha, lags):
    """Regressor matrix and response of the dynamic quantile test:
    demeaned hits on a constant, their lags, and the current VaR."""
    hits = np.asarray(indicators, dtype=float) - alpha
    var_series = np.asarray(var_series, dtype=float)
    m = hits.shape[0]
    if m <= lags + 2:
        raise InputError("too few observations for the requested lags")
    y = hits[lags:]
    cols = [np.ones(m - lags)]
    for k in range(1, lags + 1):
        cols.append(hits[lags - k: m - k])
    cols.append(var_series[lags:])
    return np.column_stack(cols), y


def dq_test(records, lags=1, indicators=None, var_series=None,
            alpha=None) -> TestResult:
    """Dynamic quantile Wald test; chi-square with lags + 2 df."""
    if records is not None:
        v = violations(records)
        indicators = v.indicators
        var_series = np.array([r.var for r in records])
        alpha = v.alpha
    indicators = np.asarray(indicators, dtype=int)
    if int(indicators.sum()) < 2:
        return TestResult(float("nan"), float("nan"), lags + 2,
                          status=SKIP_FEW_VIOLATIONS)
    x_mat, y = dq_design(indicators, var_series, alpha, lags)
    xtx = x_mat.T @ x_mat
    status = "ok"
    try:
        beta = np.linalg.solve(xtx, x_mat.T @ y)
    except np.linalg.LinAlgError:
        beta = np.linalg.pinv(xtx) @ (x_mat.T @ y)
        status = "flagged: singular regressor matrix"
    stat = float(beta @ xtx @ beta / (alpha * (1.0 - alpha)))
    df = lags + 2
    return TestResult(stat, float(sps.chi2.sf(stat, df)), df, status=status)


# ---------------------------------------------------------------------------
# quantile-regression calibration test

def _check_loss(u, alpha):
    return np.sum(u * (alpha - (u < 0)))


def quantile_regression(x_mat, y, alpha, smoothing=1e-6, max_iter=100):
    """Check-loss minimizer via iteratively reweighted least squares."""
    x_mat = np.asarray(x_mat, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.linalg.lstsq(x_mat, y, rcond=None)[0]
    converged = False
    for _ in range(max_iter):
        u = y - x_mat @ beta
        w = np.where(u >= 0, alpha, 1.0 - alpha) / np.maximum(np.abs(u),
                                                              smoothing)
        wx = x_mat * w[:, None]
        try:
            new = np.linalg.solve(x_mat.T @ wx, wx.T @ y)
        except np.linalg.LinAlgError:
            break
        if np.max(np.abs(new - beta)) < 1e-10:
            beta = new
            converged = True
            break
        beta = new
    return beta, converged


def _hall_sheather_bandwidth(alpha, m):
    z = sps.norm.ppf(alpha)
    za = sps.norm.ppf(1.0 - 0.05 / 2.0)
    return m ** (-1.0 / 3.0) * za ** (2.0 / 3.0) * (
        1.5 * sps.norm.pdf(z) ** 2 / (2.0 * z**2 + 1.0)
    ) ** (1.0 / 3.0)


def vqr_test(records, alpha=None, returns=None, var_series=None) -> TestResult:
    """Quantile regression of returns on VaR; Wald test of (0, 1).

    Sandwich variance with a Gaussian-kernel sparsity estimate at zero,
    bandwidth from the Hall-Sheather rule.
    """
    if records is not None:
        returns = np.array([r.realized_return for r in records])
        var_series = np.array([r.var for r in records])
        alpha = records[0].alpha
    returns = np.asarray(returns, dtype=float)
    var_series = np.asarray(var_series, dtype=float)
    m = returns.shape[0]
    if m < 50:
        raise InputError("need at least 50 forecasts for the VQR test")
    if int(np.sum(returns < var_series)) < 2:
        return TestResult(float("nan"), float("nan"), 2,
                          status=SKIP_FEW_VIOLATIONS)
    x_mat = np.column_stack([np.ones(m), var_series])
    beta, converged = quantile_regression(x_mat, returns, alpha)
    resid = returns - x_mat @ beta

    h = _hall_sheather_bandwidth(alpha, m)
    lo = np.quantile(resid, max(alpha - h, 1e-4))
    hi = np.quantile(resid, min(alpha + h, 1.0 - 1e-4))
    bw = max((hi - lo) / 2.0, 1e-8)
    f0 = float(np.mean(sps.norm.pdf(resid / bw)) / bw)
    cov = alpha * (1.0 - alpha) / f0**2 * np.linalg.inv(x_mat.T @ x_mat)

    delta = beta - np.array([0.0, 1.0])
    stat = float(delta @ np.linalg.solve(cov, delta))
    status = "ok" if converged else "flagged: IRLS did not converge"
    return TestResult(stat, float(sps.chi2.sf(stat, 2)), 2, status=status)


# ---------------------------------------------------------------------------
# joint (VaR, ES) scoring function

def joint_loss(records=None, alpha=None, returns=None, var_series=None,
               es_series=None):
    """Per-day strictly consistent scores for the (VaR, ES) pair and their
    total.  The exp(ES) weighting assumes ES is a lower-tail (negative)
    forecast; es > 50 would overflow and is rejected."""
    if records is not None:
        returns = np.array([r.realized_return for r in records])
        var_series = np.array([r.var for r in records])
        es_series = np.array([r.es for r in records])
        alpha = records[0].alpha
    returns = np.asarray(returns, dtype=float)
    var_series = np.asarray(var_series, dtype=float)
    es_series = np.asarray(es_series, dtype=float)
    if np.any(es_series > 50.0):
        raise NumericalError("es > 50 would overflow exp(es)")
    ind = (returns < var_series).astype(float)
    e_es = np.exp(es_series)
    s = (
        (ind - alpha) * var_series
        - ind * returns
        + e_es * (es_series - var_series
                  + (ind / alpha) * (var_series - returns))
        - e_es
        + 1.0
        - np.log(1.0 - alpha)
    )
    return s, float(np.sum(s))


# ---------------------------------------------------------------------------
# model confidence set

@dataclass
class McsResult:
    included: list
    pvalues: dict
    eliminated_order: list
    method: str
    confidence: float


def _block_bootstrap_indices(t_len, block_len, n_boot, rng):
    block_len = min(block_len, t_len)
    n_blocks = int(np.ceil(t_len / block_len))
    starts = rng.integers(0, t_len - block_len + 1, size=(n_boot, n_blocks))
    idx = (starts[:, :, None] + np.arange(block_len)[None, None, :])
    return idx.reshape(n_boot, -1)[:, :t_len]


def mcs(losses, model_ids=None, method="R", confidence=0.90, block_len=21,
        n_boot=5000, seed=0) -> McsResult:
    """Model confidence set by iterative elimination.

    losses: (T, M) per-day loss matrix.  Pairwise mean loss differentials
    are studentized with moving-block bootstrap variances; the range (R)
    or sum-of-squares (SQ) statistic is compared with its bootstrap
    distribution, and the worst model is removed while equal predictive
    ability is rejected at level 1 - confidence.  The full elimination
    sequence is computed so every model gets a (monotonized) MCS p-value.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.ndim != 2 or losses.shape[1] < 2:
        raise InputError("need a (T, M) loss matrix with at least 2 models")
    if not np.all(np.isfinite(losses)):
        raise InputError("loss matrix contains non-finite entries")
    if method not in ("R", "SQ"):
        raise InputError(f"unknown MCS method {method!r}")
    t_len, n_models = losses.shape
    if model_ids is None:
        model_ids = [f"model_{i}" for i in range(n_models)]
    model_ids = list(model_ids)

    rng = np.random.default_rng(seed)
    idx = _block_bootstrap_indices(t_len, block_len, n_boot, rng)
    # bootstrap means of each loss column (time blocks shared across models)
    boot_means = np.empty((n_boot, n_models))
    chunk = max(1, int(2e7 // max(t_len, 1)))
    for s in range(0, n_boot, chunk):
        boot_means[s:s + chunk] = losses[idx[s:s + chunk]].mean(axis=1)
    full_means = losses.mean(axis=0)

    active = list(range(n_models))
    eliminated = []
    pvals_seq = []
    while len(active) > 1:
        a = np.asarray(active)
        mu = full_means[a]
        bm = boot_means[:, a]
        d = mu[:, None] - mu[None, :]
        bd = bm[:, :, None] - bm[:, None, :]
        var = np.mean((bd - d[None, :, :]) ** 2, axis=0)
        k = len(active)
        iu = np.triu_indices(k, 1)
        sd = np.sqrt(var[iu])
        zero = sd == 0
        sd[zero] = 1.0
        t_obs = d[iu] / sd
        t_obs[zero] = np.where(d[iu][zero] == 0, 0.0,
                               np.sign(d[iu][zero]) * 1e12)
        t_boot = (bd[:, iu[0], iu[1]] - d[iu][None, :]) / sd[None, :]
        if method == "R":
            stat = float(np.max(np.abs(t_obs)))
            stat_boot = np.max(np.abs(t_boot), axis=1)
        else:
            stat = float(np.sum(t_obs**2))
            stat_boot = np.sum(t_boot**2, axis=1)
        pval = float(np.mean(stat_boot >= stat))
        pvals_seq.append(pval)
        # eliminate the model worst relative to the active-set average
        d_i = mu - mu.mean()
        bd_i = bm - bm.mean(axis=1, keepdims=True)
        var_i = np.mean((bd_i - d_i[None, :]) ** 2, axis=0)
        sd_i = np.sqrt(np.where(var_i > 0, var_i, 1.0))
        t_i = d_i / sd_i
        worst = int(np.argmax(t_i))
        eliminated.append(active[worst])
        active.pop(worst)

    # monotonized MCS p-values over the elimination order
    pvalues = {}
    running = 0.0
    for model_idx, p in zip(eliminated, pvals_seq):
        running = max(running, p)
        pvalues[model_ids[model_idx]] = running
    pvalues[model_ids[active[0]]] = 1.0

    cut = 1.0 - confidence
    included = [mid for mid in model_ids if pvalues[mid] >= cut]
    return McsResult(included=included, pvalues=pvalues,
                     eliminated_order=[model_ids[i] for i in eliminated],
                     method=method, confidence=confidence)


# ---------------------------------------------------------------------------
# aggregated report

def es_implied_level(dist, alpha):
    """Quantile level at which the alpha-level ES forecast sits under the
    fitted return distribution: F_z(e_z(alpha))."""
    return float(dist.cdf(dist.tail_mean(alpha)))


def backtest_report(records_by_model, alpha, confidence=0.90, block_len=21,
                    n_boot=5000, seed=0):
    """Full per-model test battery plus both MCS methods.

    Returns a JSON-ready dict: per model VRate/ESRate, each test's
    (stat, p, reject at 5%), the total joint loss and its rank, and the
    MCS membership under the R and SQ statistics.
    """
    if not records_by_model:
        raise InputError("no models to backtest")
    models = list(records_by_model)
    totals = {}
    per_day = {}
    report = {"alpha": alpha, "models": {}}
    for mid in models:
        recs = records_by_model[mid]
        v = violations(recs, alpha)
        s, total = joint_loss(recs, alpha)
        per_day[mid] = s
        totals[mid] = total
        tests = {
            "UC": uc_test(v),
            "IND": ind_test(v),
            "CC": cc_test(v),
            "DQ1": dq_test(recs, lags=1),
            "DQ4": dq_test(recs, lags=4),
            "VQR": vqr_test(recs),
        }
        report["models"][mid] = {
            "m": v.m,
            "violations": v.count,
            "vrate": vrate(recs),
            "esrate": esrate(recs),
            "tests": {
                name: {"stat": t.stat, "pvalue": t.pvalue, "df": t.df,
                       "status": t.status, "reject_5pct": t.reject_5pct}
                for name, t in tests.items()
            },
            "joint_loss": total,
        }
    ranked = sorted(models, key=lambda k: totals[k])
    for rank, mid in enumerate(ranked, start=1):
        report["models"][mid]["loss_rank"] = rank

    if len(models) >= 2:
        t_min = min(len(per_day[mid]) for mid in models)
        loss_mat = np.column_stack([per_day[mid][:t_min] for mid in models])
        report["mcs"] = {}
        for method in ("R", "SQ"):
            res = mcs(loss_mat, models, method=method, confidence=confidence,
                      block_len=block_len, n_boot=n_boot, seed=seed)
            report["mcs"][method] = {
                "confidence": confidence,
                "included": res.included,
                "pvalues": res.pvalues,
            }
    return report
