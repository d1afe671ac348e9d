"""Daily returns and realized volatility measures from intraday OHLC bars.

Implemented per day on an equally spaced intraday grid:

  RV     sum of squared log close-to-close changes, anchored at the day
         open (overnight move excluded)
  RR     sum of squared log high-low ranges over bars, divided by 4 ln 2
  SubRV  RV on a coarse grid averaged over all fine-grid offsets of that
         grid; offsets shorten the first coarse interval at the day open
         and clamp the last one at the day close
  SubRR  same sub-sampling applied to ranges (max high / min low per
         coarse interval), divided by 4 ln 2 after averaging
  ScRV   RV rescaled by the trailing-q ratio of daily squared returns to
         trailing RV (ScRR analogously with the daily squared range)

The measure operations are unit-free (natural log); the panel builder
converts to percentage-squared units so measures align with percentage
log-returns.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError

FOUR_LOG2 = 4.0 * np.log(2.0)
PCT_SCALE = 100.0**2  # log^2 -> percent^2
MEASURE_KINDS = ("RV", "RR", "ScRV", "ScRR", "SubRV", "SubRR")
PROXY_KINDS = ("SqReturn", "SqRange")


@dataclass
class DayBars:
    """One day of intraday OHLC bars, sorted by interval index."""

    day: object  # datetime.date
    interval: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray

    def __post_init__(self):
        self.interval = np.asarray(self.interval, dtype=int)
        for name in ("open", "high", "low", "close"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        order = np.argsort(self.interval)
        for name in ("interval", "open", "high", "low", "close"):
            setattr(self, name, getattr(self, name)[order])
        n = self.interval.shape[0]
        if n == 0:
            raise InputError(f"{self.day}: empty bar set")
        if np.any(np.diff(self.interval) != 1) or self.interval[0] != 1:
            raise InputError(f"{self.day}: bar intervals must be 1..N contiguous")
        if np.any(self.low <= 0):
            raise InputError(f"{self.day}: nonpositive price")
        bad = (self.low > np.minimum(self.open, self.close)) | (
            self.high < np.maximum(self.open, self.close)
        )
        if np.any(bad):
            raise InputError(
                f"{self.day}: bar {self.interval[np.argmax(bad)]} violates "
                "low <= open,close <= high"
            )

    @property
    def n_bars(self):
        return self.interval.shape[0]

    def grid_prices(self):
        """Within-day price grid: day open followed by every bar close."""
        return np.concatenate(([self.open[0]], self.close))


@dataclass
class DailyBars:
    """Daily OHLC series with strictly increasing days."""

    days: list
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray

    def __post_init__(self):
        for name in ("open", "high", "low", "close"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if len(self.days) != self.close.shape[0]:
            raise InputError("daily fields must share one length")
        if any(b <= a for a, b in zip(self.days, self.days[1:])):
            raise InputError("daily rows must have strictly increasing dates")
        if np.any(self.low <= 0):
            raise InputError("nonpositive daily price")
        bad = (self.low > np.minimum(self.open, self.close)) | (
            self.high < np.maximum(self.open, self.close)
        )
        if np.any(bad):
            raise InputError(
                f"daily bar {self.days[np.argmax(bad)]} violates "
                "low <= open,close <= high"
            )


@dataclass
class RealizedSeries:
    """Aligned daily returns and one realized measure."""

    days: list
    returns: np.ndarray
    measure: np.ndarray
    kind: str

    def __post_init__(self):
        self.returns = np.asarray(self.returns, dtype=float)
        self.measure = np.asarray(self.measure, dtype=float)
        if not (len(self.days) == self.returns.shape[0] == self.measure.shape[0]):
            raise InputError("series vectors must be aligned")
        if np.any(~np.isfinite(self.returns)) or np.any(~np.isfinite(self.measure)):
            raise InputError("series contains missing entries")
        if np.any(self.measure < 0):
            raise InputError("realized measure must be nonnegative")

    def __len__(self):
        return self.returns.shape[0]


# ---------------------------------------------------------------------------
# per-day measures

def daily_returns(closes):
    """Percentage log-returns 100 * diff(log C)."""
    closes = np.asarray(closes, dtype=float)
    if closes.shape[0] < 2:
        raise InputError("need at least 2 daily closes")
    if np.any(closes <= 0):
        raise InputError("nonpositive close price")
    return 100.0 * np.diff(np.log(closes))


def realized_variance(day: DayBars):
    if day.n_bars < 2:
        raise InputError(f"{day.day}: insufficient intraday data")
    return float(np.sum(np.diff(np.log(day.grid_prices())) ** 2))


def realized_range(day: DayBars):
    if day.n_bars < 2:
        raise InputError(f"{day.day}: insufficient intraday data")
    return float(np.sum((np.log(day.high) - np.log(day.low)) ** 2) / FOUR_LOG2)


def _offset_grids(n_bars, coarse_len):
    """Fine-grid index sets (into the day price grid 0..N) for each
    sub-sampling offset.  Offset i > 0 starts with a shortened interval
    at the day open and is clamped at the day close."""
    if coarse_len < 1 or n_bars % coarse_len != 0:
        raise InputError(
            f"incompatible sub-sampling grid: {n_bars} bars, "
            f"coarse length {coarse_len}"
        )
    n_k = n_bars // coarse_len
    grids = []
    for i in range(n_k):
        pts = [0] + [min(i + n_k * m, n_bars) for m in range(coarse_len + 1)]
        pts = sorted(set(pts))
        grids.append(np.asarray(pts, dtype=int))
    return grids


def subsampled_rv(day: DayBars, coarse_len):
    if day.n_bars < 2:
        raise InputError(f"{day.day}: insufficient intraday data")
    prices = day.grid_prices()
    grids = _offset_grids(day.n_bars, coarse_len)
    per_offset = [
        np.sum(np.diff(np.log(prices[g])) ** 2) for g in grids
    ]
    return float(np.sum(np.array(per_offset)) / len(grids))


def subsampled_rr(day: DayBars, coarse_len):
    if day.n_bars < 2:
        raise InputError(f"{day.day}: insufficient intraday data")
    log_high = np.log(day.high)
    log_low = np.log(day.low)
    grids = _offset_grids(day.n_bars, coarse_len)
    per_offset = []
    for g in grids:
        terms = np.array([
            (log_high[a:b].max() - log_low[a:b].min()) ** 2
            for a, b in zip(g[:-1], g[1:])
        ])
        per_offset.append(np.sum(terms))
    return float(np.sum(np.array(per_offset)) / (FOUR_LOG2 * len(grids)))


def aggregate_bars(day: DayBars, coarse_len):
    """Group fine bars into coarse_len equally sized coarse bars."""
    if day.n_bars % coarse_len != 0:
        raise InputError(
            f"{day.day}: {day.n_bars} bars not divisible into {coarse_len}"
        )
    n_k = day.n_bars // coarse_len
    shape = (coarse_len, n_k)
    return DayBars(
        day=day.day,
        interval=np.arange(1, coarse_len + 1),
        open=day.open.reshape(shape)[:, 0],
        high=day.high.reshape(shape).max(axis=1),
        low=day.low.reshape(shape).min(axis=1),
        close=day.close.reshape(shape)[:, -1],
    )


def scale_measure(highfreq, daily_proxy, q=66):
    """Trailing-q rescaling of a high-frequency measure by a daily proxy.

    The first q entries are warm-up and returned as NaN; callers trim
    them jointly across aligned series.
    """
    highfreq = np.asarray(highfreq, dtype=float)
    daily_proxy = np.asarray(daily_proxy, dtype=float)
    if highfreq.shape != daily_proxy.shape:
        raise InputError("scaling inputs must be aligned")
    t_len = highfreq.shape[0]
    if t_len < q + 1:
        raise InputError(f"need more than q={q} observations to scale")
    out = np.full(t_len, np.nan)
    for t in range(q, t_len):
        den = np.sum(highfreq[t - q: t])
        if den == 0:
            raise InputError(f"degenerate scaling window ending at index {t}")
        out[t] = np.sum(daily_proxy[t - q: t]) / den * highfreq[t]
    return out


# ---------------------------------------------------------------------------
# panel assembly

@dataclass
class MeasurePanel:
    """All measures aligned on a common post-warm-up day index."""

    days: list
    returns: np.ndarray
    measures: dict

    def series(self, kind) -> RealizedSeries:
        if kind not in self.measures:
            raise InputError(f"unknown measure kind {kind!r}")
        return RealizedSeries(days=self.days, returns=self.returns,
                              measure=self.measures[kind], kind=kind)


def compute_measures(intraday_days, daily: DailyBars, coarse_len=78, q=66):
    """Build the aligned measure panel plus the per-day long table.

    Quality rule: the expected bar count is the modal count across days;
    days with fewer than 80% of it, or a count that breaks the fine/coarse
    grid ratio, are dropped from every series jointly.

    Returns (panel, long_rows, dropped) where long_rows are
    (day, kind, value) tuples for every retained day and computed kind.
    """
    if not intraday_days:
        raise InputError("no intraday data")
    counts = np.array([d.n_bars for d in intraday_days])
    vals, freq = np.unique(counts, return_counts=True)
    expected = int(vals[np.argmax(freq)])
    if expected % coarse_len != 0:
        raise InputError(
            f"expected bar count {expected} not divisible by "
            f"coarse length {coarse_len}"
        )
    n_k = expected // coarse_len

    daily_by_day = {d: i for i, d in enumerate(daily.days)}
    kept, dropped = [], []
    for d in intraday_days:
        ok = (
            d.n_bars >= 0.8 * expected
            and d.n_bars % n_k == 0
            and d.n_bars // n_k >= 2
            and d.day in daily_by_day
        )
        (kept if ok else dropped).append(d)
    if len(kept) < 2:
        raise InputError("fewer than 2 usable days after quality filtering")
    kept.sort(key=lambda d: d.day)

    days = [d.day for d in kept]
    idx = [daily_by_day[d] for d in days]
    closes = daily.close[idx]
    rets = daily_returns(closes)  # aligned with days[1:]

    rv = np.array([realized_variance(aggregate_bars(d, d.n_bars // n_k))
                   for d in kept]) * PCT_SCALE
    rr = np.array([realized_range(aggregate_bars(d, d.n_bars // n_k))
                   for d in kept]) * PCT_SCALE
    subrv = np.array([subsampled_rv(d, d.n_bars // n_k) for d in kept]) * PCT_SCALE
    subrr = np.array([subsampled_rr(d, d.n_bars // n_k) for d in kept]) * PCT_SCALE

    sq_return = np.concatenate(([np.nan], rets**2))
    log_range = 100.0 * (np.log(daily.high[idx]) - np.log(daily.low[idx]))
    sq_range = log_range**2 / FOUR_LOG2

    # scaling runs on days with a defined proxy (day 1 has no return)
    scrv = np.full(len(kept), np.nan)
    scrr = np.full(len(kept), np.nan)
    if len(kept) - 1 > q:
        scrv[1:] = scale_measure(rv[1:], sq_return[1:], q)
        scrr[1:] = scale_measure(rr[1:], sq_range[1:], q)

    per_day = {
        "RV": rv, "RR": rr, "ScRV": scrv, "ScRR": scrr,
        "SubRV": subrv, "SubRR": subrr,
        "SqReturn": sq_return, "SqRange": sq_range,
    }
    long_rows = [
        (day, kind, per_day[kind][i])
        for i, day in enumerate(days)
        for kind in MEASURE_KINDS + PROXY_KINDS
        if np.isfinite(per_day[kind][i])
    ]

    # joint trim: drop day 1 (no return) plus the q-day scaling warm-up
    start = q + 1
    if start >= len(kept):
        panel = None
    else:
        panel = MeasurePanel(
            days=days[start:],
            returns=rets[start - 1:],
            measures={k: per_day[k][start:] for k in MEASURE_KINDS},
        )
    return panel, long_rows, [d.day for d in dropped]
