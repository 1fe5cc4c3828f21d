"""Assemble the labelled intent-level feature set and split it by time.

Every feature is known at the filing date, so that the label (did the
intent go unexecuted?) cannot leak into its own predictors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..errors import FGEError
from ..eventstudy import MarketData
from ..portfolio import AmihudWindows, prior_illiquidity

FEATURES = ("signal_magnitude", "filing_gap_proxy", "prior_volatility", "illiquidity", "cmer", "log_size")
TRAIN_SHARE = 0.8
GAP_PROXY_CAP_DAYS = 365
AMIHUD_SCALE = 1e6


@dataclass
class LabeledDataset:
    frame: pd.DataFrame
    feature_names: tuple[str, ...] = FEATURES
    dropped: dict[str, int] = field(default_factory=dict)

    @property
    def prevalence(self) -> float:
        return float(self.frame["label"].mean())

    def arrays(self, split: str | None = None):
        f = self.frame if split is None else self.frame[self.frame["split"] == split]
        return f[list(self.feature_names)].to_numpy(dtype=float), f["label"].to_numpy(dtype=np.int64)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        sd = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(sd > 0, sd, 1.0))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


def filing_gap_proxy(outcomes: pd.DataFrame, cap: int = GAP_PROXY_CAP_DAYS) -> np.ndarray:
    """Days since the same insider's previous notice on the same firm, capped (first notice = cap)."""
    order = outcomes.sort_values(["person_id", "permco", "file_date", "intent_id"], kind="mergesort")
    prev = order.groupby(["person_id", "permco"], sort=False)["file_date"].shift(1)
    gap = (order["file_date"] - prev).dt.days.fillna(cap).clip(upper=cap)
    return gap.reindex(outcomes.index).to_numpy(dtype=float)


def market_features(outcomes: pd.DataFrame, market: MarketData) -> pd.DataFrame:
    """log market cap on the last trading day before filing and prior 12-month Amihud (x1e6)."""
    rows = market.firm_rows(outcomes["permco"])
    t = market.day0(outcomes["file_date"]) - 1
    ok = (rows >= 0) & (t >= 0)
    r, tt = np.clip(rows, 0, None), np.clip(t, 0, None)
    cap = market.price[r, tt] * market.shares_outstanding[r, tt]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_size = np.where(ok & (cap > 0), np.log(cap), np.nan)
    illiq = prior_illiquidity(outcomes, AmihudWindows(market)) * AMIHUD_SCALE
    return pd.DataFrame({"intent_id": outcomes["intent_id"].to_numpy(), "log_size": log_size,
                         "illiquidity": illiq})


def assemble_dataset(outcomes: pd.DataFrame, eventstudy: pd.DataFrame, measures: pd.DataFrame,
                     train_share: float = TRAIN_SHARE) -> LabeledDataset:
    """Join labels and features, drop incomplete rows with a reason, split chronologically.

    ``cmer`` here is the market run-up before filing: the realized gap CMER only
    exists for executed intents and would encode the label.
    """
    if not 0 < train_share < 1:
        raise FGEError("train_share must lie in (0, 1)")
    es = eventstudy.set_index("intent_id")
    ms = measures.set_index("intent_id")
    ids = outcomes["intent_id"]
    frame = pd.DataFrame({
        "intent_id": ids.to_numpy(),
        "file_date": outcomes["file_date"].to_numpy(),
        "signal_magnitude": outcomes["signal_magnitude"].to_numpy(dtype=float),
        "filing_gap_proxy": filing_gap_proxy(outcomes),
        "prior_volatility": es["residual_sd"].reindex(ids).to_numpy(dtype=float),
        "illiquidity": ms["illiquidity"].reindex(ids).to_numpy(dtype=float),
        "cmer": es["pre_filing_runup"].reindex(ids).to_numpy(dtype=float),
        "log_size": ms["log_size"].reindex(ids).to_numpy(dtype=float),
        "label": outcomes["non_execution"].to_numpy(dtype=np.int64),
    })
    dropped: dict[str, int] = {}
    keep = np.ones(len(frame), dtype=bool)
    for col in FEATURES:
        bad = keep & ~np.isfinite(frame[col].to_numpy(dtype=float))
        if bad.any():
            dropped[f"missing_{col}"] = int(bad.sum())
        keep &= ~bad
    frame = frame.loc[keep].sort_values(["file_date", "intent_id"], kind="mergesort").reset_index(drop=True)
    n_train = int(np.floor(train_share * len(frame)))
    frame["split"] = np.where(np.arange(len(frame)) < n_train, "train", "test")
    return LabeledDataset(frame, FEATURES, dropped)


def split_arrays(X, y, train_share: float = TRAIN_SHARE):
    """Ordered split for arrays already in time order; returns Xtr, ytr, Xte, yte."""
    n_train = int(np.floor(train_share * len(y)))
    return X[:n_train], y[:n_train], X[n_train:], y[n_train:]
