"""One-step-ahead volatility, VaR and ES forecasting.

A rolling fixed-size window re-estimates the model (every refit_every
days), filters the window, projects the variance one day ahead and maps
it through the fitted error distribution's quantile and tail mean:

    VaR = sqrt(h_next) q_z(alpha),   ES = sqrt(h_next) e_z(alpha).

Forecast combinations across models (mean / median / min / max of the
per-day forecasts) are supported as pseudo-models FC-*.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import estimate as est
from . import model as mdl
from .errors import InputError, NumericalError
from .measures import RealizedSeries

# model id -> (family, error distribution)
MODEL_IDS = {
    "rg-gg": ("rg", "GG"),
    "rg-tg": ("rg", "tG"),
    "rg-twg": ("rg", "TWG"),
    "g-t": ("garch", "tG"),
    "g-tw": ("garch", "TWG"),
}

COMBINE_IDS = {"mean": "FC-Mean", "median": "FC-Med", "min": "FC-Min",
               "max": "FC-Max"}


@dataclass
class ForecastRecord:
    day: object
    model_id: str
    alpha: float
    h_next: float
    var: float
    es: float
    realized_return: float
    flagged: bool = False

    @property
    def violation(self):
        return self.realized_return < self.var


def h_forecast(params: mdl.RgParams, state: mdl.FilterState, x_n):
    """Variance projection h_{n+1} = omega + beta h_n + gamma x_n."""
    return params.omega + params.beta * state.h[-1] + params.gamma * float(x_n)


def var_es(dist, h_next, alpha):
    """(VaR, ES) for the next day given its conditional variance."""
    if not h_next > 0:
        raise InputError("h_next must be positive")
    s = np.sqrt(h_next)
    return s * dist.quantile(alpha), s * dist.tail_mean(alpha)


def default_init(family, dist_name):
    """Estimation starting point: every coefficient 0.25 (the Student-t
    dof starts at 8 to sit inside nu > 2)."""
    if family == "rg":
        names = mdl.RgParams.vector_names(dist_name)
    else:
        names = mdl.GarchParams.vector_names(dist_name)
    return np.array([8.0 if n == "nu" else 0.25 for n in names])


def _fit_window(family, dist_name, r_win, x_win, estimator, mcmc_config, seed):
    if family == "rg":
        loglik = mdl.make_rg_loglik_fn(r_win, x_win, dist_name)
        names = mdl.RgParams.vector_names(dist_name)
    else:
        loglik = mdl.make_garch_loglik_fn(r_win, dist_name)
        names = mdl.GarchParams.vector_names(dist_name)
    init = default_init(family, dist_name)
    if estimator == "mcmc":
        cfg = replace(mcmc_config, seed=seed)
        chain = est.mcmc_estimate(loglik, init, cfg,
                                  blocks=est.blocks_from_names(names),
                                  param_names=names)
        theta = est.posterior_point(chain, cfg.final_discard()).theta
    elif estimator == "ml":
        theta = est.ml_estimate(loglik, init).theta
    else:
        raise InputError(f"unknown estimator {estimator!r}")
    if family == "rg":
        return mdl.RgParams.from_vector(theta, dist_name)
    return mdl.GarchParams.from_vector(theta, dist_name)


def _one_step(family, params, r_hist, x_hist):
    """h_{n+1} given fitted params and the trailing history."""
    if family == "rg":
        state = mdl.rg_filter(params, r_hist, x_hist)
        return h_forecast(params, state, x_hist[-1])
    h = mdl.garch_filter_h(params, r_hist)
    return params.omega + params.alpha * r_hist[-1] ** 2 + params.beta * h[-1]


def rolling_forecast(series: RealizedSeries, model_id, window, alpha,
                     estimator="mcmc", refit_every=1, mcmc_config=None,
                     seed=0, fixed_params=None):
    """Generate one forecast per day after the initial window.

    With fixed_params the estimation step is skipped entirely and the
    procedure reduces to filtered one-step forecasts under that fixed
    parameter vector.
    """
    if model_id not in MODEL_IDS:
        raise InputError(f"unknown model id {model_id!r}")
    family, dist_name = MODEL_IDS[model_id]
    r, x, days = series.returns, series.measure, series.days
    t_len = r.shape[0]
    if not 2 <= window < t_len:
        raise InputError("window must leave at least one forecast day")
    if mcmc_config is None:
        mcmc_config = est.desk_config()

    records = []
    if fixed_params is not None:
        # single filtering pass; h[t] is already the one-step forecast for
        # day t given information through t-1
        params = fixed_params
        h1 = mdl.default_h1(r[:window])
        if family == "rg":
            state = mdl.rg_filter(params, r, x, h1=h1)
            h_next = state.h
        else:
            h_next = mdl.garch_filter_h(params, r, h1=h1)
        q = params.dist.quantile(alpha)
        e = params.dist.tail_mean(alpha)
        for t in range(window, t_len):
            s = np.sqrt(h_next[t])
            records.append(ForecastRecord(
                day=days[t], model_id=model_id, alpha=alpha,
                h_next=float(h_next[t]), var=float(s * q), es=float(s * e),
                realized_return=float(r[t]),
            ))
        return records

    params = None
    for t in range(window, t_len):
        r_win = r[t - window: t]
        x_win = x[t - window: t]
        flagged = False
        if params is None or (t - window) % refit_every == 0:
            try:
                params = _fit_window(family, dist_name, r_win, x_win,
                                     estimator, mcmc_config,
                                     seed=_window_seed(seed, t))
            except (InputError, NumericalError):
                if params is None:
                    raise
                flagged = True  # keep previous parameters
        h_next = _one_step(family, params, r_win, x_win)
        v, e = var_es(params.dist, h_next, alpha)
        records.append(ForecastRecord(
            day=days[t], model_id=model_id, alpha=alpha, h_next=float(h_next),
            var=float(v), es=float(e), realized_return=float(r[t]),
            flagged=flagged,
        ))
    return records


def _window_seed(seed, t):
    return int(np.random.SeedSequence(entropy=(seed, t)).generate_state(1)[0])


def combine(model_records, method):
    """Per-day combination of VaR and ES forecasts across models."""
    if method not in COMBINE_IDS:
        raise InputError(f"unknown combination method {method!r}")
    seqs = list(model_records.values()) if isinstance(model_records, dict) \
        else list(model_records)
    if not seqs:
        raise InputError("no forecasts to combine")
    n = len(seqs[0])
    for s in seqs:
        if len(s) != n or any(a.day != b.day for a, b in zip(s, seqs[0])):
            raise InputError("misaligned forecast days across models")
    fns = {"mean": np.mean, "median": np.median, "min": np.min, "max": np.max}
    fn = fns[method]
    out = []
    for i in range(n):
        recs = [s[i] for s in seqs]
        rets = {r.realized_return for r in recs}
        if len(rets) > 1:
            raise InputError(f"inconsistent realized returns on {recs[0].day}")
        alphas = {r.alpha for r in recs}
        if len(alphas) > 1:
            raise InputError("cannot combine forecasts at different levels")
        out.append(ForecastRecord(
            day=recs[0].day, model_id=COMBINE_IDS[method],
            alpha=recs[0].alpha, h_next=float("nan"),
            var=float(fn([r.var for r in recs])),
            es=float(fn([r.es for r in recs])),
            realized_return=recs[0].realized_return,
        ))
    return out
