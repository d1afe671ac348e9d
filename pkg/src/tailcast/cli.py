"""Command-line orchestration.

Subcommands: measures, simulate, estimate, forecast, backtest, simstudy,
stw.  Every run writes a manifest.json (inputs, resolved arguments, seed,
versions, timings, output digests) next to its artifacts.  Exit codes:
0 ok, 1 numerical failure, 2 input error.
"""

import argparse
import datetime
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, backtest, estimate, forecast, io, measures, model
from . import simstudy as study
from . import stw as stw_mod
from .errors import InputError, NumericalError

MEASURE_FLAG = {"rv": "RV", "rr": "RR", "scrv": "ScRV", "scrr": "ScRR",
                "subrv": "SubRV", "subrr": "SubRR"}


def _mcmc_config(args, paper_scale):
    cfg = estimate.McmcConfig(seed=args.seed) if paper_scale \
        else estimate.desk_config(seed=args.seed)
    for key in ("epoch_len", "epoch_discard", "final_len", "max_epochs",
                "stop_threshold"):
        val = getattr(args, key, None)
        if val is not None:
            cfg = estimate.McmcConfig(**{**cfg.__dict__, key: val})
    return cfg


def _write_manifest(out_dir, command, args_dict, inputs, outputs, started,
                    duration):
    manifest = {
        "command": command,
        "args": {k: v for k, v in sorted(args_dict.items())
                 if not callable(v)},
        "inputs": {str(p): io.sha256_file(p) for p in inputs},
        "outputs": {str(p): io.sha256_file(p) for p in outputs},
        "versions": {
            "tailcast": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "started_at": started,
        "duration_s": duration,
    }
    io.write_json(Path(out_dir) / "manifest.json", manifest)


def _run_command(args, command, inputs, worker):
    """Common manifest plumbing: run worker() then record what it wrote."""
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.perf_counter()
    outputs = worker(out_dir)
    duration = time.perf_counter() - t0
    args_dict = {k: v for k, v in vars(args).items() if k != "func"}
    _write_manifest(out_dir, command, args_dict, inputs, outputs, started,
                    duration)
    return 0


def cmd_measures(args):
    def worker(out_dir):
        intraday = io.read_intraday_csv(args.intraday)
        daily = io.read_daily_csv(args.daily)
        panel, long_rows, dropped = measures.compute_measures(
            intraday, daily, coarse_len=args.coarse_len, q=args.scaling_window)
        for day in dropped:
            print(f"warning: dropped {day} (quality filter)", file=sys.stderr)
        long_path = out_dir / "measures.csv"
        io.write_long_measures_csv(long_path, long_rows)
        outputs = [long_path]
        if panel is None:
            print("warning: too few days to emit an aligned series "
                  f"(scaling warm-up is {args.scaling_window} days)",
                  file=sys.stderr)
        else:
            series_path = out_dir / "series.csv"
            io.write_series_csv(series_path,
                                panel.series(MEASURE_FLAG[args.measure]))
            outputs.append(series_path)
        return outputs

    return _run_command(args, "measures", [args.intraday, args.daily], worker)


def cmd_simulate(args):
    if args.model != "model1":
        raise InputError(f"unknown simulation model {args.model!r}")

    def worker(out_dir):
        rng = np.random.default_rng(args.seed)
        params = model.model1_params()
        r, x = model.simulate_model1(params, args.n, rng)
        day0 = datetime.date(2000, 1, 1)
        days = [day0 + datetime.timedelta(days=t) for t in range(args.n)]
        series = measures.RealizedSeries(days=days, returns=r,
                                         measure=np.maximum(x, 0.0), kind="RV")
        path = out_dir / "series.csv"
        io.write_series_csv(path, series)
        return [path]

    return _run_command(args, "simulate", [], worker)


def cmd_estimate(args):
    def worker(out_dir):
        series = io.read_series_csv(args.series)
        family, dist_name = forecast.MODEL_IDS[args.model]
        if family == "rg":
            loglik = model.make_rg_loglik_fn(series.returns, series.measure,
                                             dist_name)
            names = model.RgParams.vector_names(dist_name)
        else:
            loglik = model.make_garch_loglik_fn(series.returns, dist_name)
            names = model.GarchParams.vector_names(dist_name)
        init = forecast.default_init(family, dist_name)
        outputs = []
        if args.estimator == "mcmc":
            cfg = _mcmc_config(args, paper_scale=args.paper_scale)
            chain = estimate.mcmc_estimate(
                loglik, init, cfg, blocks=estimate.blocks_from_names(names),
                param_names=names)
            point = estimate.posterior_point(chain, cfg.final_discard())
            chain_path = out_dir / "chain.csv"
            io.write_chain_csv(chain_path, chain)
            summary = io.chain_summary(chain, point)
            summary["model"] = args.model
            summary["estimator"] = "mcmc"
            summary["loglik_at_point"] = float(loglik(point.theta))
            outputs.append(chain_path)
        else:
            res = estimate.ml_estimate(loglik, init)
            summary = {
                "model": args.model, "estimator": "ml",
                "param_names": names,
                "theta": [float(v) for v in res.theta],
                "loglik": res.loglik, "n_evals": res.n_evals,
                "improved": res.improved, "warning": res.warning,
            }
        summary_path = out_dir / "summary.json"
        io.write_json(summary_path, summary)
        outputs.append(summary_path)
        return outputs

    return _run_command(args, "estimate", [args.series], worker)


def cmd_forecast(args):
    def worker(out_dir):
        path = out_dir / "forecasts.csv"
        if args.combine:
            grouped = {}
            for f in args.inputs:
                for mid, recs in io.read_forecast_csv(f).items():
                    grouped[mid] = recs
            records = forecast.combine(grouped, args.combine)
        else:
            series = io.read_series_csv(args.series)
            cfg = _mcmc_config(args, paper_scale=args.paper_scale)
            fixed = None
            if args.params is not None:
                fixed = model.RgParams.from_json(Path(args.params).read_text())
            records = forecast.rolling_forecast(
                series, args.model, window=args.window, alpha=args.alpha,
                estimator=args.estimator, refit_every=args.refit_every,
                mcmc_config=cfg, seed=args.seed, fixed_params=fixed)
        io.write_forecast_csv(path, records)
        outputs = [path]
        if args.emit_plot_data:
            plot_path = out_dir / "plot_data.csv"
            with open(plot_path, "w") as fh:
                fh.write("date,series,value\n")
                for rec in records:
                    day = rec.day.isoformat()
                    fh.write(f"{day},return,{rec.realized_return!r}\n")
                    fh.write(f"{day},var,{rec.var!r}\n")
                    fh.write(f"{day},es,{rec.es!r}\n")
            outputs.append(plot_path)
        return outputs

    inputs = list(args.inputs) if args.combine else [args.series]
    if not args.combine and args.params:
        inputs.append(args.params)
    return _run_command(args, "forecast", inputs, worker)


def cmd_backtest(args):
    def worker(out_dir):
        grouped = {}
        for f in args.forecasts:
            for mid, recs in io.read_forecast_csv(f).items():
                if mid in grouped:
                    raise InputError(f"duplicate model id {mid!r} in inputs")
                grouped[mid] = recs
        report = backtest.backtest_report(
            grouped, alpha=args.alpha, confidence=args.confidence,
            block_len=args.block_len, n_boot=args.n_boot, seed=args.seed)
        report_path = out_dir / "report.json"
        io.write_json(report_path, report)
        csv_path = out_dir / "report.csv"
        _write_report_csv(csv_path, report)
        return [report_path, csv_path]

    return _run_command(args, "backtest", list(args.forecasts), worker)


def _write_report_csv(path, report):
    tests = ["UC", "IND", "CC", "DQ1", "DQ4", "VQR"]
    with open(path, "w") as fh:
        cols = ["model", "m", "violations", "vrate", "esrate"]
        cols += [f"{t}_{f}" for t in tests for f in ("stat", "pvalue",
                                                     "reject_5pct")]
        cols += ["joint_loss", "loss_rank", "mcs_R", "mcs_SQ"]
        fh.write(",".join(cols) + "\n")
        mcs_sec = report.get("mcs", {})
        for mid, entry in sorted(report["models"].items()):
            row = [mid, str(entry["m"]), str(entry["violations"]),
                   repr(entry["vrate"]), repr(entry["esrate"])]
            for t in tests:
                tr = entry["tests"][t]
                row += [repr(tr["stat"]), repr(tr["pvalue"]),
                        str(int(tr["reject_5pct"]))]
            row += [repr(entry["joint_loss"]), str(entry["loss_rank"])]
            for method in ("R", "SQ"):
                included = mcs_sec.get(method, {}).get("included", [])
                row.append(str(int(mid in included)))
            fh.write(",".join(row) + "\n")


def cmd_simstudy(args):
    def worker(out_dir):
        cfg = _mcmc_config(args, paper_scale=args.paper_scale)
        reps = args.reps if args.reps is not None else (
            5000 if args.paper_scale else 100)
        summary = study.run_study(n=args.n, reps=reps, mcmc_config=cfg,
                                  seed=args.seed, n_jobs=args.jobs)
        path = out_dir / "study.csv"
        io.write_study_csv(path, summary)
        return [path]

    return _run_command(args, "simstudy", [], worker)


def cmd_stw_table(args):
    def worker(out_dir):
        params = stw_mod.StwParams(args.lambda1, args.k1)
        alphas = [float(a) for a in args.alphas.split(",")]
        path = out_dir / "stw_table.csv"
        with open(path, "w") as fh:
            fh.write("alpha,quantile,es\n")
            for a in alphas:
                q = stw_mod.quantile(a, params)
                e = (repr(float(stw_mod.es(a, params)))
                     if 0 < a < params.prob_negative else "")
                fh.write(f"{a!r},{float(q)!r},{e}\n")
        return [path]

    return _run_command(args, "stw table", [], worker)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config", help="flat JSON file mirroring the flags")


def _add_chain_knobs(p):
    p.add_argument("--paper-scale", action="store_true",
                   help="full-length chains / replication counts")
    p.add_argument("--epoch-len", type=int, dest="epoch_len")
    p.add_argument("--epoch-discard", type=int, dest="epoch_discard")
    p.add_argument("--final-len", type=int, dest="final_len")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--stop-threshold", type=float, dest="stop_threshold")


def build_parser():
    parser = argparse.ArgumentParser(prog="tailcast")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measures", help="realized measures from OHLC bars")
    p.add_argument("--intraday", required=True)
    p.add_argument("--daily", required=True)
    p.add_argument("--measure", choices=sorted(MEASURE_FLAG), default="subrv")
    p.add_argument("--coarse-len", type=int, default=78, dest="coarse_len")
    p.add_argument("--scaling-window", type=int, default=66,
                   dest="scaling_window")
    _add_common(p)
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("simulate", help="simulate the benchmark model")
    p.add_argument("--model", default="model1")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="fit a model to a series")
    p.add_argument("--series", required=True)
    p.add_argument("--model", choices=sorted(forecast.MODEL_IDS),
                   default="rg-twg")
    p.add_argument("--estimator", choices=["mcmc", "ml"], default="mcmc")
    _add_chain_knobs(p)
    _add_common(p)
    p.set_defaults(func=cmd_estimate, paper_scale_default=True)

    p = sub.add_parser("forecast", help="rolling one-step VaR/ES forecasts")
    p.add_argument("--series")
    p.add_argument("--model", choices=sorted(forecast.MODEL_IDS),
                   default="rg-twg")
    p.add_argument("--estimator", choices=["mcmc", "ml"], default="mcmc")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--window", type=int, default=1000)
    p.add_argument("--refit-every", type=int, default=1, dest="refit_every")
    p.add_argument("--params", help="JSON file of fixed parameters "
                                    "(skips estimation)")
    p.add_argument("--combine", choices=sorted(forecast.COMBINE_IDS))
    p.add_argument("--inputs", nargs="*", default=[],
                   help="forecast CSVs to combine")
    p.add_argument("--emit-plot-data", action="store_true",
                   dest="emit_plot_data")
    _add_chain_knobs(p)
    _add_common(p)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("backtest", help="test battery + model confidence set")
    p.add_argument("--forecasts", nargs="+", required=True)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--confidence", type=float, default=0.90)
    p.add_argument("--block-len", type=int, default=21, dest="block_len")
    p.add_argument("--n-boot", type=int, default=5000, dest="n_boot")
    _add_common(p)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("simstudy", help="estimator bias/RMSE study")
    p.add_argument("--n", type=int, default=3000)
    p.add_argument("--reps", type=int)
    p.add_argument("--jobs", type=int, default=1)
    _add_chain_knobs(p)
    _add_common(p)
    p.set_defaults(func=cmd_simstudy)

    p = sub.add_parser("stw", help="distribution utilities")
    stw_sub = p.add_subparsers(dest="stw_command", required=True)
    pt = stw_sub.add_parser("table", help="quantile / ES table as CSV")
    pt.add_argument("--lambda1", type=float, required=True)
    pt.add_argument("--k1", type=float, required=True)
    pt.add_argument("--alphas", default="0.001,0.005,0.01,0.025,0.05")
    _add_common(pt)
    pt.set_defaults(func=cmd_stw_table)

    return parser


def _apply_config_file(args):
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise InputError(f"config file not found: {path}")
        overrides = json.loads(path.read_text())
        for key, val in overrides.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise InputError(f"unknown config key {key!r}")
            if getattr(args, attr) in (None, False):
                setattr(args, attr, val)
    return args


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(args)
        for path_attr in ("intraday", "daily", "series", "params"):
            val = getattr(args, path_attr, None)
            if val is not None and not Path(val).exists():
                raise InputError(f"input file not found: {val}")
        for f in getattr(args, "forecasts", []) or []:
            if not Path(f).exists():
                raise InputError(f"input file not found: {f}")
        for f in getattr(args, "inputs", []) or []:
            if not Path(f).exists():
                raise InputError(f"input file not found: {f}")
        if getattr(args, "paper_scale_default", False):
            args.paper_scale = True
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
