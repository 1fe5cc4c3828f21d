"""Small hand-built market panels for unit tests."""
from __future__ import annotations

import numpy as np
import pandas as pd

from fge.eventstudy import MarketData


def weekdays(start: str, n: int) -> pd.DatetimeIndex:
    return pd.bdate_range(start, periods=n)


def make_market(returns, factors=None, rf=0.0, price=None, volume=None, shares=1e6, btm=1.0,
                start="2020-01-01", permcos=None) -> MarketData:
    """Build a MarketData from a (firm x day) return matrix."""
    returns = np.atleast_2d(np.asarray(returns, dtype=float))
    n_firms, n_days = returns.shape
    dates = weekdays(start, n_days)
    if factors is None:
        factors = np.zeros((n_days, 4))
    permcos = np.arange(1, n_firms + 1) if permcos is None else np.asarray(permcos)
    price = np.broadcast_to(np.asarray(10.0 if price is None else price, dtype=float), returns.shape)
    volume = np.broadcast_to(np.asarray(1000.0 if volume is None else volume, dtype=float), returns.shape)
    shares = np.broadcast_to(np.asarray(shares, dtype=float), returns.shape)
    btm = np.broadcast_to(np.asarray(btm, dtype=float), returns.shape)
    security = pd.DataFrame({
        "permco": np.repeat(permcos, n_days),
        "date": np.tile(dates.to_numpy(), n_firms),
        "total_return": (returns + rf).ravel(),
        "price": price.ravel(),
        "volume": volume.ravel(),
        "shares_outstanding": shares.ravel(),
        "book_to_market": btm.ravel(),
    })
    fac = pd.DataFrame({"date": dates, "mkt_rf": factors[:, 0], "smb": factors[:, 1],
                        "hml": factors[:, 2], "umd": factors[:, 3], "rf": rf})
    return MarketData(security, fac)
