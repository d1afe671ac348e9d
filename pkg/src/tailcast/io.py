"""CSV and JSON wire formats.

Floats are written with repr (shortest round-trip form) so identical
inputs and seeds produce byte-identical artifacts.
"""

import csv
import datetime
import hashlib
import json

import numpy as np

from .errors import InputError
from .forecast import ForecastRecord
from .measures import DailyBars, DayBars, RealizedSeries


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse_date(text, path, line):
    try:
        return datetime.date.fromisoformat(text)
    except ValueError:
        raise InputError(f"{path}:{line}: bad date {text!r}") from None


def _parse_float(text, path, line, col):
    try:
        return float(text)
    except ValueError:
        raise InputError(f"{path}:{line}: bad {col} value {text!r}") from None


def read_intraday_csv(path):
    """`date,interval,open,high,low,close` rows -> list of DayBars."""
    by_day = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["date", "interval", "open", "high", "low", "close"]:
            raise InputError(f"{path}:1: unexpected intraday header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise InputError(f"{path}:{lineno}: expected 6 columns")
            day = _parse_date(row[0], path, lineno)
            try:
                interval = int(row[1])
            except ValueError:
                raise InputError(
                    f"{path}:{lineno}: bad interval {row[1]!r}") from None
            vals = [_parse_float(row[i], path, lineno, c)
                    for i, c in ((2, "open"), (3, "high"), (4, "low"),
                                 (5, "close"))]
            by_day.setdefault(day, []).append((interval, *vals))
    if not by_day:
        raise InputError(f"{path}: no intraday rows")
    days = []
    for day in sorted(by_day):
        rows = by_day[day]
        arr = np.array(rows, dtype=float)
        days.append(DayBars(day=day, interval=arr[:, 0].astype(int),
                            open=arr[:, 1], high=arr[:, 2], low=arr[:, 3],
                            close=arr[:, 4]))
    return days


def read_daily_csv(path):
    """`date,open,high,low,close` rows -> DailyBars."""
    days, o, h, lo, c = [], [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["date", "open", "high", "low", "close"]:
            raise InputError(f"{path}:1: unexpected daily header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise InputError(f"{path}:{lineno}: expected 5 columns")
            days.append(_parse_date(row[0], path, lineno))
            for lst, i, col in ((o, 1, "open"), (h, 2, "high"),
                                (lo, 3, "low"), (c, 4, "close")):
                lst.append(_parse_float(row[i], path, lineno, col))
    if not days:
        raise InputError(f"{path}: no daily rows")
    return DailyBars(days=days, open=np.array(o), high=np.array(h),
                     low=np.array(lo), close=np.array(c))


def write_long_measures_csv(path, rows):
    """`date,measure_kind,value` long table."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "measure_kind", "value"])
        for day, kind, value in rows:
            w.writerow([day.isoformat(), kind, _fmt(value)])


def write_series_csv(path, series: RealizedSeries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "return", "measure", "measure_kind"])
        for day, r, x in zip(series.days, series.returns, series.measure):
            w.writerow([day.isoformat(), _fmt(r), _fmt(x), series.kind])


def read_series_csv(path) -> RealizedSeries:
    days, rets, xs, kinds = [], [], [], set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["date", "return", "measure", "measure_kind"]:
            raise InputError(f"{path}:1: unexpected series header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise InputError(f"{path}:{lineno}: expected 4 columns")
            days.append(_parse_date(row[0], path, lineno))
            rets.append(_parse_float(row[1], path, lineno, "return"))
            xs.append(_parse_float(row[2], path, lineno, "measure"))
            kinds.add(row[3])
    if len(kinds) != 1:
        raise InputError(f"{path}: expected exactly one measure_kind")
    return RealizedSeries(days=days, returns=np.array(rets),
                          measure=np.array(xs), kind=kinds.pop())


def write_forecast_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "model", "alpha", "h_next", "var", "es",
                    "return", "violation"])
        for r in records:
            w.writerow([
                r.day.isoformat(), r.model_id, _fmt(r.alpha), _fmt(r.h_next),
                _fmt(r.var), _fmt(r.es), _fmt(r.realized_return),
                int(r.violation),
            ])


def read_forecast_csv(path):
    """Returns records grouped by model id, in file order."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["date", "model", "alpha", "h_next", "var", "es",
                    "return", "violation"]
        if header != expected:
            raise InputError(f"{path}:1: unexpected forecast header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 8:
                raise InputError(f"{path}:{lineno}: expected 8 columns")
            rec = ForecastRecord(
                day=_parse_date(row[0], path, lineno),
                model_id=row[1],
                alpha=_parse_float(row[2], path, lineno, "alpha"),
                h_next=_parse_float(row[3], path, lineno, "h_next"),
                var=_parse_float(row[4], path, lineno, "var"),
                es=_parse_float(row[5], path, lineno, "es"),
                realized_return=_parse_float(row[6], path, lineno, "return"),
            )
            out.setdefault(row[1], []).append(rec)
    if not out:
        raise InputError(f"{path}: no forecast rows")
    return out


def write_chain_csv(path, chain):
    """`iter,block,accepted,theta_1..theta_k,logpost`; one row per block
    update, thetas snapshot the end of the iteration."""
    dim = chain.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "block", "accepted"]
                   + [f"theta_{j + 1}" for j in range(dim)] + ["logpost"])
        for i in range(chain.draws.shape[0]):
            theta = [_fmt(v) for v in chain.draws[i]]
            lp = _fmt(chain.logposts[i])
            for b in range(len(chain.block_map)):
                w.writerow([i, b, int(chain.accepts[i, b])] + theta + [lp])


def chain_summary(chain, point):
    return {
        "param_names": chain.param_names,
        "theta": [float(v) for v in point.theta],
        "sd": [float(v) for v in point.sd],
        "pct_2_5": [float(v) for v in point.lo],
        "pct_97_5": [float(v) for v in point.hi],
        "n_retained": point.n_retained,
        "epochs": [
            {"kind": e.kind, "start": e.start, "end": e.end,
             "acceptance": [float(a) for a in e.acceptance]}
            for e in chain.epochs
        ],
    }


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_study_csv(path, summary):
    estimators = sorted({r.estimator for r in summary.results})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["parameter", "true"]
        for e in estimators:
            header += [f"{e}_mean", f"{e}_rmse"]
        header += [f"{e}_failures" for e in estimators]
        w.writerow(header)
        for row in summary.rows:
            out = [row["name"],
                   "" if row["true"] is None else _fmt(row["true"])]
            for e in estimators:
                out += [_fmt(row[f"{e}_mean"]), _fmt(row[f"{e}_rmse"])]
            out += [summary.failures[e] for e in estimators]
            w.writerow(out)


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()
