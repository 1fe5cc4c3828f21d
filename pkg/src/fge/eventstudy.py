"""Filing-gap drift, four-factor calibration and short-window CARs.

Trading-day arithmetic runs on the factor calendar: day 0 of an event is the
event date if it is a trading day, otherwise the next one. The four-factor
model is estimated on trading days [-120, -20) relative to the filing's day 0
(100 days) and reused for both the filing CAR and the execution CAR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from . import stats
from .errors import FGEError, InsufficientDataError

FACTORS = ("mkt_rf", "smb", "hml", "umd")
EST_START, EST_END = -120, -20
DEFAULT_MIN_OBS = 60
CAR_WINDOW = (0, 2)
RUNUP_DAYS = 20

EVENTSTUDY_COLUMNS = ["intent_id", "cmer", "gap_days", "car_144", "car_4", "alpha", "beta_mkt",
                      "beta_smb", "beta_hml", "beta_umd", "residual_sd"]


@dataclass(frozen=True)
class FactorModelFit:
    permco: int
    alpha: float
    beta_mkt: float
    beta_smb: float
    beta_hml: float
    beta_umd: float
    residual_sd: float
    est_window: tuple[pd.Timestamp, pd.Timestamp]
    n_obs: int

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.alpha, self.beta_mkt, self.beta_smb, self.beta_hml, self.beta_umd])


class MarketData:
    """Dense (firm x trading day) view of the security and factor panels."""

    def __init__(self, security: pd.DataFrame, factors: pd.DataFrame):
        factors = factors.sort_values("date", kind="mergesort")
        self.dates = factors["date"].to_numpy().astype("datetime64[D]")
        self.day = self.dates.astype(np.int64)
        self.factor_matrix = factors[list(FACTORS)].to_numpy(dtype=float)
        self.rf = factors["rf"].to_numpy(dtype=float)
        self.mkt_rf = self.factor_matrix[:, 0]
        self.permcos = np.unique(security["permco"].to_numpy())
        self.firm_index = {int(p): i for i, p in enumerate(self.permcos)}
        rows = np.searchsorted(self.permcos, security["permco"].to_numpy())
        cols = np.searchsorted(self.day, security["date"].to_numpy().astype("datetime64[D]").astype(np.int64))
        shape = (len(self.permcos), len(self.day))

        def dense(col):
            m = np.full(shape, np.nan)
            m[rows, cols] = security[col].to_numpy(dtype=float)
            return m

        self.total_return = dense("total_return")
        self.price = dense("price")
        self.volume = dense("volume")
        self.shares_outstanding = dense("shares_outstanding")
        self.book_to_market = dense("book_to_market")
        self.excess = self.total_return - self.rf[None, :]

    def day0(self, dates) -> np.ndarray:
        """Index of the first trading day on or after each date."""
        d = np.asarray(pd.to_datetime(dates).to_numpy()).astype("datetime64[D]").astype(np.int64)
        return np.searchsorted(self.day, d, side="left")

    def firm_rows(self, permcos) -> np.ndarray:
        return np.array([self.firm_index.get(int(p), -1) for p in permcos], dtype=np.int64)


def excess_return(total_return, rf, dates=None, rf_dates=None):
    """Security return in excess of the risk-free rate; dates must line up when given."""
    if dates is not None and rf_dates is not None:
        if not np.array_equal(np.asarray(dates), np.asarray(rf_dates)):
            raise FGEError("security and factor dates do not match")
    return np.asarray(total_return, dtype=float) - np.asarray(rf, dtype=float)


def cmer(market_excess) -> float:
    """Geometrically compounded market excess return; 0.0 for an empty window."""
    return math.prod(1.0 + float(r) for r in market_excess) - 1.0


def cmer_window(market: MarketData, file_date, exec_date) -> float:
    """CMER over trading days strictly after ``file_date`` up to and including ``exec_date``."""
    f = np.datetime64(pd.Timestamp(file_date).date(), "D").astype(np.int64)
    e = np.datetime64(pd.Timestamp(exec_date).date(), "D").astype(np.int64)
    if e < f:
        raise FGEError("execution precedes filing")
    lo = np.searchsorted(market.day, f, side="right")
    hi = np.searchsorted(market.day, e, side="right")
    return cmer(market.mkt_rf[lo:hi])


def _fit_arrays(market: MarketData, rows: np.ndarray, t0: np.ndarray):
    offsets = np.arange(EST_START, EST_END)
    idx = t0[:, None] + offsets[None, :]
    inside = (idx >= 0) & (idx < len(market.day)) & (rows[:, None] >= 0)
    safe = np.clip(idx, 0, len(market.day) - 1)
    y = market.excess[np.clip(rows, 0, None)[:, None], safe]
    ok = inside & np.isfinite(y)
    X = np.concatenate([np.ones(idx.shape + (1,)), market.factor_matrix[safe]], axis=2)
    y = np.where(ok, y, 0.0)
    X = X * ok[:, :, None]
    return X, y, ok


def fit_carhart_batch(market: MarketData, permcos, event_dates, min_obs: int = DEFAULT_MIN_OBS,
                      chunk: int = 20_000):
    """Vectorized four-factor fits; returns (coef[n,5], residual_sd[n], n_obs[n], t0[n]).

    Events with fewer than ``min_obs`` usable days get NaN coefficients.
    """
    rows = market.firm_rows(permcos)
    t0 = market.day0(event_dates)
    if len(rows) > chunk:
        parts = [_fit_chunk(market, rows[i:i + chunk], t0[i:i + chunk], min_obs)
                 for i in range(0, len(rows), chunk)]
        coef, rsd, n_obs = (np.concatenate(x) for x in zip(*parts))
        return coef, rsd, n_obs, t0
    return (*_fit_chunk(market, rows, t0, min_obs), t0)


def _fit_chunk(market, rows, t0, min_obs):
    X, y, ok = _fit_arrays(market, rows, t0)
    n_obs = ok.sum(axis=1)
    good = n_obs >= max(min_obs, 6)
    coef = np.full((len(rows), 5), np.nan)
    rsd = np.full(len(rows), np.nan)
    if good.any():
        Xg, yg = X[good], y[good]
        xtx = np.einsum("nti,ntj->nij", Xg, Xg)
        xty = np.einsum("nti,nt->ni", Xg, yg)
        try:
            b = np.linalg.solve(xtx, xty[..., None])[..., 0]
        except np.linalg.LinAlgError:
            b = np.stack([np.linalg.lstsq(a, v, rcond=None)[0] for a, v in zip(xtx, xty)])
        resid = (yg - np.einsum("nti,ni->nt", Xg, b)) * ok[good]
        coef[good] = b
        rsd[good] = np.sqrt((resid ** 2).sum(axis=1) / (n_obs[good] - 5))
    return coef, rsd, n_obs


def fit_carhart(permco: int, event_date, market: MarketData, min_obs: int = DEFAULT_MIN_OBS) -> FactorModelFit:
    """Single-security fit through the shared OLS kernel."""
    row = market.firm_index.get(int(permco), -1)
    if row < 0:
        raise InsufficientDataError(f"no return history for permco {permco}")
    t0 = int(market.day0([event_date])[0])
    X, y, ok = _fit_arrays(market, np.array([row]), np.array([t0]))
    n_obs = int(ok.sum())
    if n_obs < min_obs:
        raise InsufficientDataError(
            f"permco {permco}: {n_obs} usable days in the estimation window, need {min_obs}")
    fit = stats.ols(y[0][ok[0]], X[0][ok[0]], names=("alpha",) + FACTORS)
    lo = max(t0 + EST_START, 0)
    hi = min(t0 + EST_END - 1, len(market.day) - 1)
    window = (pd.Timestamp(market.dates[lo]), pd.Timestamp(market.dates[hi]))
    b = fit.coefficients
    return FactorModelFit(int(permco), *map(float, b), float(fit.residual_sd), window, n_obs)


def car_batch(market: MarketData, permcos, event_dates, coef, window=CAR_WINDOW) -> np.ndarray:
    """Sum of abnormal returns over ``window`` trading days from each event's day 0."""
    rows = market.firm_rows(permcos)
    t0 = market.day0(event_dates)
    offs = np.arange(window[0], window[1] + 1)
    idx = t0[:, None] + offs[None, :]
    inside = (idx >= 0) & (idx < len(market.day)) & (rows[:, None] >= 0)
    safe = np.clip(idx, 0, len(market.day) - 1)
    realized = market.excess[np.clip(rows, 0, None)[:, None], safe]
    expected = coef[:, :1] + np.einsum("ntk,nk->nt", market.factor_matrix[safe], coef[:, 1:])
    ar = realized - expected
    complete = inside.all(axis=1) & np.isfinite(ar).all(axis=1)
    return np.where(complete, ar.sum(axis=1), np.nan)


def car(fit: FactorModelFit, event_date, market: MarketData, window=CAR_WINDOW) -> float:
    value = car_batch(market, [fit.permco], [event_date], fit.coefficients[None, :], window)[0]
    if not np.isfinite(value):
        raise InsufficientDataError(f"permco {fit.permco}: event window {window} incomplete after {event_date}")
    return float(value)


def run_event_study(outcomes: pd.DataFrame, market: MarketData, min_obs: int = DEFAULT_MIN_OBS,
                    window=CAR_WINDOW) -> pd.DataFrame:
    """Per-intent CMER, four-factor fit, filing CAR and (if executed) execution CAR.

    Intents without enough history keep a row with ``excluded`` set to the reason.
    """
    coef, rsd, n_obs, t0 = fit_carhart_batch(market, outcomes["permco"], outcomes["file_date"], min_obs)
    car144 = car_batch(market, outcomes["permco"], outcomes["file_date"], coef, window)
    executed = outcomes["first_exec_date"].notna().to_numpy()
    exec_dates = outcomes["first_exec_date"].where(executed, outcomes["file_date"])
    car4 = np.where(executed, car_batch(market, outcomes["permco"], exec_dates, coef, window), np.nan)

    cm = np.full(len(outcomes), np.nan)
    lo = np.searchsorted(market.day, outcomes["file_date"].to_numpy().astype("datetime64[D]").astype(np.int64),
                         side="right")
    ed = exec_dates.to_numpy().astype("datetime64[D]").astype(np.int64)
    hi = np.searchsorted(market.day, ed, side="right")
    onep = (1.0 + market.mkt_rf).tolist()
    for k in np.nonzero(executed)[0]:
        cm[k] = math.prod(onep[lo[k]:hi[k]]) - 1.0
    start = np.clip(t0 - RUNUP_DAYS, 0, None)
    runup = np.array([math.prod(onep[s:e]) - 1.0 for s, e in zip(start.tolist(), np.minimum(t0, len(onep)).tolist())])

    reason = np.where(n_obs < min_obs, "insufficient_history",
                      np.where(~np.isfinite(car144), "incomplete_event_window", ""))
    return pd.DataFrame({
        "intent_id": outcomes["intent_id"].to_numpy(),
        "cmer": cm,
        "gap_days": outcomes["gap_days"].to_numpy(),
        "car_144": car144,
        "car_4": car4,
        "alpha": coef[:, 0],
        "beta_mkt": coef[:, 1],
        "beta_smb": coef[:, 2],
        "beta_hml": coef[:, 3],
        "beta_umd": coef[:, 4],
        "residual_sd": rsd,
        "n_obs": n_obs,
        "pre_filing_runup": runup,
        "excluded": reason,
    })


def paired_information_premium(results: pd.DataFrame) -> stats.TestResult:
    """Paired t-test of filing CAR minus execution CAR over intents with both."""
    both = results[["car_144", "car_4"]].dropna()
    if len(both) < 2:
        raise InsufficientDataError(f"need at least 2 complete CAR pairs, got {len(both)}")
    return stats.paired_t(both["car_144"].to_numpy(), both["car_4"].to_numpy())


def decile_table(cmer_values, signal_magnitudes) -> pd.DataFrame:
    """Mean signal magnitude per CMER decile; group sizes differ by at most one."""
    c = np.asarray(cmer_values, dtype=float)
    s = np.asarray(signal_magnitudes, dtype=float)
    keep = np.isfinite(c) & np.isfinite(s)
    c, s = c[keep], s[keep]
    if c.size < 10:
        raise InsufficientDataError(f"decile table needs at least 10 observations, got {c.size}")
    order = np.argsort(c, kind="mergesort")
    rows = []
    for d, chunk in enumerate(np.array_split(order, 10), start=1):
        rows.append((d, float(c[chunk].min()), float(c[chunk].max()), float(s[chunk].mean()), int(chunk.size)))
    return pd.DataFrame(rows, columns=["decile", "cmer_low", "cmer_high", "mean_signal_magnitude", "count"])
