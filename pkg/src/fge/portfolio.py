"""Characteristic-adjusted calendar-time portfolios and liquidity measures.

Monthly benchmarks come from independent quintile sorts on size, book-to-market
and momentum (5 x 5 x 5 cells) formed with characteristics known at the end of
the previous month. Quintile ties go to the lower quintile. A security's
benchmark is the equal-weighted return of the other members of its cell; when
the cell has no other member, or a characteristic is missing, the size
quintile alone serves as benchmark and the row is flagged.
"""
from __future__ import annotations

import math

import numpy as np
import pandas as pd

from . import stats
from .errors import FGEError, InsufficientDataError
from .eventstudy import MarketData

BTM_LAG_MONTHS = 6
MIN_ALPHA_MONTHS = 12
FEATURES = ("signal_magnitude", "illiquidity", "prior_volatility", "filing_gap_days")


def quintiles(values) -> np.ndarray:
    """Quintile 1..5 per value, lower quintile on ties; NaN stays 0 (unassigned)."""
    v = np.asarray(values, dtype=float)
    out = np.zeros(v.shape, dtype=np.int64)
    ok = np.isfinite(v)
    if ok.any():
        s = np.sort(v[ok])
        below = np.searchsorted(s, v[ok], side="left")
        out[ok] = 1 + (5 * below) // ok.sum()
    return out


def dgtw_assign(snapshot: pd.DataFrame) -> pd.DataFrame:
    """Map each security of one month's snapshot to a cell (i, j, k) in 1..5.

    ``snapshot`` needs permco, size, value, momentum. Securities lacking value or
    momentum keep their size quintile and are flagged ``complete == False``.
    """
    if np.isfinite(snapshot["size"].to_numpy(dtype=float)).sum() < 5:
        raise InsufficientDataError("need at least 5 securities with a defined size")
    q_size = quintiles(snapshot["size"])
    q_val = quintiles(snapshot["value"])
    q_mom = quintiles(snapshot["momentum"])
    complete = (q_size > 0) & (q_val > 0) & (q_mom > 0)
    return pd.DataFrame({"permco": snapshot["permco"].to_numpy(), "size_q": q_size, "value_q": q_val,
                         "momentum_q": q_mom, "complete": complete})


def dgtw_adjust(security_return: float, benchmark_return: float) -> float:
    return security_return - benchmark_return


class MonthlyPanel:
    """Month-level returns and characteristics derived from the daily panel."""

    def __init__(self, market: MarketData):
        self.market = market
        months = market.dates.astype("datetime64[M]")
        self.months, start = np.unique(months, return_index=True)
        end = np.r_[start[1:], len(months)]
        self.month_start, self.month_end = start, end
        n_firms, n_m = len(market.permcos), len(self.months)
        log1p = np.log1p(np.nan_to_num(market.total_return, nan=0.0))
        present = np.isfinite(market.total_return)
        cs = np.concatenate([np.zeros((n_firms, 1)), np.cumsum(log1p, axis=1)], axis=1)
        cnt = np.concatenate([np.zeros((n_firms, 1)), np.cumsum(present, axis=1)], axis=1)
        self.ret = np.expm1(cs[:, end] - cs[:, start])
        self.ret[(cnt[:, end] - cnt[:, start]) == 0] = np.nan
        last = end - 1
        self.size = market.price[:, last] * market.shares_outstanding[:, last]
        btm_end = market.book_to_market[:, last]
        self.value = np.full((n_firms, n_m), np.nan)
        self.value[:, BTM_LAG_MONTHS:] = btm_end[:, :-BTM_LAG_MONTHS]
        # snapshot at the end of month m: compound months m-11 .. m-1, skipping m itself
        logm = np.log1p(self.ret)
        self.momentum = np.full((n_firms, n_m), np.nan)
        for m in range(11, n_m):
            self.momentum[:, m] = np.expm1(logm[:, m - 11:m].sum(axis=1))
        self.month_index = {pd.Timestamp(m): i for i, m in enumerate(self.months)}

    def snapshot(self, m: int) -> pd.DataFrame:
        return pd.DataFrame({"permco": self.market.permcos, "size": self.size[:, m],
                             "value": self.value[:, m], "momentum": self.momentum[:, m]})

    def adjusted_returns(self):
        """DGTW-adjusted returns (firm x month) plus fallback flags and formation sizes."""
        n_firms, n_m = self.ret.shape
        adj = np.full((n_firms, n_m), np.nan)
        fallback = np.zeros((n_firms, n_m), dtype=bool)
        form_size = np.full((n_firms, n_m), np.nan)
        for m in range(1, n_m):
            snap = self.snapshot(m - 1)
            if np.isfinite(snap["size"].to_numpy()).sum() < 5:
                continue
            cells = dgtw_assign(snap)
            r = self.ret[:, m]
            ok = np.isfinite(r) & (cells["size_q"].to_numpy() > 0)
            cell_id = np.where(cells["complete"], cells["size_q"] * 100 + cells["value_q"] * 10 + cells["momentum_q"], -1)
            bench, fb = _loo_benchmark(r, ok, np.asarray(cell_id), cells["size_q"].to_numpy())
            adj[:, m] = np.where(ok, r - bench, np.nan)
            fallback[:, m] = fb & ok
            form_size[:, m] = self.size[:, m - 1]
        return adj, fallback, form_size


def _loo_benchmark(r, ok, cell_id, size_q):
    bench = np.full(r.shape, np.nan)
    fb = np.zeros(r.shape, dtype=bool)
    rr = np.where(ok, r, 0.0)

    def group_loo(keys, mask):
        sums, cnts = {}, {}
        for k, v in zip(keys[mask], rr[mask]):
            sums[k] = sums.get(k, 0.0) + v
            cnts[k] = cnts.get(k, 0) + 1
        s = np.array([sums.get(k, 0.0) for k in keys])
        c = np.array([cnts.get(k, 0) for k in keys])
        own = mask.astype(int)
        with np.errstate(invalid="ignore", divide="ignore"):
            return (s - rr * own) / (c - own), (c - own)

    cell_ok = ok & (cell_id >= 0)
    b_cell, n_cell = group_loo(cell_id, cell_ok)
    b_size, n_size = group_loo(size_q, ok)
    use_cell = cell_ok & (n_cell > 0)
    bench[use_cell] = b_cell[use_cell]
    use_size = ok & ~use_cell & (n_size > 0)
    bench[use_size] = b_size[use_size]
    fb[ok & ~use_cell] = True
    rest = ok & ~use_cell & ~use_size
    if rest.any():
        total, count = rr[ok].sum(), ok.sum()
        bench[rest] = (total - rr[rest]) / max(count - 1, 1)
    return bench, fb


def membership(outcomes: pd.DataFrame, panel: MonthlyPanel, holding_months: int = 1) -> pd.DataFrame:
    """Rows (intent_id, permco, month index) for non-executed intents, starting at the expiry month."""
    if holding_months < 1:
        raise FGEError("holding period must be at least one month")
    aborted = outcomes[outcomes["non_execution"] == 1]
    expiry = (aborted["file_date"] + pd.Timedelta(days=90)).to_numpy().astype("datetime64[M]")
    first = np.searchsorted(panel.months, expiry)
    rows = []
    for iid, p, m0, e in zip(aborted["intent_id"], aborted["permco"], first, expiry):
        if m0 >= len(panel.months) or panel.months[m0] != e:
            continue
        for h in range(holding_months):
            if m0 + h < len(panel.months):
                rows.append((iid, int(p), int(m0 + h)))
    return pd.DataFrame(rows, columns=["intent_id", "permco", "month_idx"])


def calendar_portfolio(members: pd.DataFrame, panel: MonthlyPanel, adjusted: np.ndarray,
                       sizes: np.ndarray, weighting: str = "EW") -> pd.DataFrame:
    """Monthly EW or VW mean of member adjusted returns; empty months are dropped."""
    if weighting not in ("EW", "VW"):
        raise FGEError(f"weighting must be EW or VW, got {weighting!r}")
    rows_f = panel.market.firm_rows(members["permco"])
    m_idx = members["month_idx"].to_numpy()
    r = adjusted[rows_f, m_idx]
    w = sizes[rows_f, m_idx] if weighting == "VW" else np.ones(len(r))
    ok = np.isfinite(r) & np.isfinite(w) & (w > 0)
    df = pd.DataFrame({"m": m_idx[ok], "r": r[ok], "w": w[ok]})
    out = []
    for m, g in df.groupby("m", sort=True):
        weights = g["w"].to_numpy() / g["w"].sum()
        out.append((pd.Timestamp(panel.months[m]).strftime("%Y-%m"), weighting,
                    float(weights @ g["r"].to_numpy()), len(g)))
    return pd.DataFrame(out, columns=["month", "weighting", "excess_return", "n_members"])


def series_from_values(values, weighting: str = "EW") -> pd.DataFrame:
    values = np.asarray(values, dtype=float)
    months = pd.period_range("2000-01", periods=len(values), freq="M").strftime("%Y-%m")
    return pd.DataFrame({"month": months, "weighting": weighting, "excess_return": values,
                         "n_members": np.ones(len(values), dtype=int)})


def alpha_test(series: pd.DataFrame) -> stats.TestResult:
    """t-test of the mean monthly adjusted excess return; alpha in bps = 1e4 * mean."""
    if len(series) < MIN_ALPHA_MONTHS:
        raise InsufficientDataError(f"alpha test needs at least {MIN_ALPHA_MONTHS} months, got {len(series)}")
    return stats.one_sample_t(series["excess_return"].to_numpy())


def size_split_alphas(members: pd.DataFrame, panel: MonthlyPanel, adjusted, sizes, weighting="EW"):
    """Split members each month at the median formation size; alpha test per half.

    Returns ({"small": TestResult, "large": TestResult}, {"small": series, "large": series}, labels).
    """
    rows_f = panel.market.firm_rows(members["permco"])
    s = sizes[rows_f, members["month_idx"].to_numpy()]
    med = pd.Series(s).groupby(members["month_idx"].to_numpy()).transform("median").to_numpy()
    label = np.where(s > med, "large", "small")
    label = np.where(np.isfinite(s), label, "")
    tagged = members.assign(size_group=label)
    results, series = {}, {}
    for grp in ("small", "large"):
        sub = tagged[tagged["size_group"] == grp]
        if sub.empty:
            raise InsufficientDataError(f"{grp}-cap sub-sample is empty (degenerate size median)")
        series[grp] = calendar_portfolio(sub, panel, adjusted, sizes, weighting)
        results[grp] = alpha_test(series[grp])
    return results, series, tagged


def standardize(X):
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0, ddof=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (X - mu) / sd


def cross_sectional_determinants(alphas, features: pd.DataFrame) -> stats.OlsFit:
    """OLS of per-intent alpha on standardized features plus an intercept."""
    y = np.asarray(alphas, dtype=float)
    Z = standardize(features.to_numpy(dtype=float))
    X = np.column_stack([np.ones(len(y)), Z])
    return stats.ols(y, X, names=("intercept",) + tuple(features.columns))


def amihud_daily(market: MarketData) -> np.ndarray:
    """|return| / dollar volume per firm-day; NaN where volume is zero or data missing."""
    dv = market.price * market.volume
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.abs(market.total_return) / dv
    out[~(dv > 0)] = np.nan
    return out


def amihud(permco: int, month, market: MarketData) -> float:
    """Mean daily |return| / dollar volume over the month's positive-volume days."""
    row = market.firm_index.get(int(permco))
    if row is None:
        raise InsufficientDataError(f"unknown permco {permco}")
    m = np.datetime64(pd.Timestamp(month).strftime("%Y-%m"), "M")
    days = market.dates.astype("datetime64[M]") == m
    vals = amihud_daily(market)[row, days]
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise InsufficientDataError(f"permco {permco}: no positive-volume day in {m}")
    return float(vals.mean())


def amihud_table(market: MarketData) -> pd.DataFrame:
    daily = amihud_daily(market)
    months = market.dates.astype("datetime64[M]")
    um, start = np.unique(months, return_index=True)
    end = np.r_[start[1:], len(months)]
    rows = []
    for i, p in enumerate(market.permcos):
        for m, a, b in zip(um, start, end):
            v = daily[i, a:b]
            v = v[np.isfinite(v)]
            if v.size:
                rows.append((int(p), str(m), float(v.mean())))
    return pd.DataFrame(rows, columns=["permco", "month", "illiq"])


class AmihudWindows:
    """Mean daily Amihud ratio over arbitrary [start, end) trading-day ranges."""

    def __init__(self, market: MarketData):
        self.market = market
        daily = amihud_daily(market)
        ok = np.isfinite(daily)
        n = daily.shape[0]
        self.cs = np.concatenate([np.zeros((n, 1)), np.cumsum(np.where(ok, daily, 0.0), axis=1)], axis=1)
        self.cnt = np.concatenate([np.zeros((n, 1)), np.cumsum(ok, axis=1)], axis=1)

    def mean(self, permcos, start_dates, end_dates, include_start=True, include_end=False) -> np.ndarray:
        rows = self.market.firm_rows(permcos)
        day = self.market.day
        s = pd.to_datetime(pd.Series(start_dates)).to_numpy().astype("datetime64[D]").astype(np.int64)
        e = pd.to_datetime(pd.Series(end_dates)).to_numpy().astype("datetime64[D]").astype(np.int64)
        lo = np.searchsorted(day, s, side="left" if include_start else "right")
        hi = np.searchsorted(day, e, side="right" if include_end else "left")
        hi = np.maximum(hi, lo)
        r = np.clip(rows, 0, None)
        tot = self.cs[r, hi] - self.cs[r, lo]
        cnt = self.cnt[r, hi] - self.cnt[r, lo]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = tot / cnt
        out[(cnt == 0) | (rows < 0)] = np.nan
        return out


def prior_illiquidity(outcomes: pd.DataFrame, windows: AmihudWindows) -> np.ndarray:
    """Mean daily Amihud over the 12 months before filing."""
    start = outcomes["file_date"] - pd.Timedelta(days=365)
    return windows.mean(outcomes["permco"], start, outcomes["file_date"])


def bps(x: float) -> float:
    return 1e4 * x if math.isfinite(x) else float("nan")
