from __future__ import annotations

import itertools
import math

import numpy as np
import pandas as pd
import pytest

from fge import portfolio as pf
from fge.errors import DegenerateSampleError, FGEError, InsufficientDataError, SingularDesignError
from fge.stats import t_tail

from builders import make_market
from oracles import quintile_by_sort


# characteristic cells

def test_lattice_one_per_cell():
    grid = list(itertools.product(range(5), repeat=3))
    snap = pd.DataFrame({"permco": np.arange(125), "size": [g[0] for g in grid],
                         "value": [g[1] for g in grid], "momentum": [g[2] for g in grid]})
    cells = pf.dgtw_assign(snap)
    keys = set(zip(cells["size_q"], cells["value_q"], cells["momentum_q"]))
    assert len(keys) == 125
    assert cells["complete"].all()


def test_identical_securities_go_low():
    snap = pd.DataFrame({"permco": np.arange(12), "size": 1.0, "value": 2.0, "momentum": 0.1})
    cells = pf.dgtw_assign(snap)
    assert (cells[["size_q", "value_q", "momentum_q"]] == 1).all().all()


def test_quintiles_match_sort_oracle(rng):
    v = np.round(rng.standard_normal(500), 1)  # plenty of ties
    np.testing.assert_array_equal(pf.quintiles(v), quintile_by_sort(v))
    w = v.copy()
    w[::7] = np.nan
    q = pf.quintiles(w)
    assert (q[::7] == 0).all()
    ok = np.isfinite(w)
    np.testing.assert_array_equal(q[ok], quintile_by_sort(w[ok]))


def test_cell_partition(rng):
    snap = pd.DataFrame({"permco": np.arange(300), "size": rng.lognormal(size=300),
                         "value": rng.lognormal(size=300), "momentum": rng.normal(size=300)})
    cells = pf.dgtw_assign(snap)
    counts = cells.groupby(["size_q", "value_q", "momentum_q"]).size()
    assert counts.sum() == 300
    assert cells["size_q"].value_counts().tolist() == [60] * 5


def test_too_few_securities():
    snap = pd.DataFrame({"permco": range(4), "size": [1.0, 2, 3, 4], "value": 1.0, "momentum": 0.0})
    with pytest.raises(InsufficientDataError):
        pf.dgtw_assign(snap)


def test_adjust_and_self_neutrality(rng):
    assert pf.dgtw_adjust(0.05, 0.05) == 0.0
    r = rng.normal(0.01, 0.05, 40)
    cell = rng.integers(0, 5, 40)
    adj = np.array([pf.dgtw_adjust(r[i], r[cell == cell[i]].mean()) for i in range(40)])
    for c in range(5):
        assert abs(adj[cell == c].mean()) < 1e-15


def test_leave_one_out_benchmark(rng):
    r = rng.normal(0.0, 0.05, 20)
    ok = np.ones(20, dtype=bool)
    bench, fb = pf._loo_benchmark(r, ok, np.full(20, 111), np.ones(20, dtype=np.int64))
    want = np.array([np.delete(r, i).mean() for i in range(20)])
    np.testing.assert_allclose(bench, want, atol=1e-15)
    assert not fb.any()


def test_singleton_cell_falls_back_to_size_quintile():
    r = np.array([0.10, 0.02, 0.04, 0.06])
    cell = np.array([111, 222, 222, -1])  # last one has an incomplete characteristic set
    size_q = np.array([1, 1, 2, 1])
    bench, fb = pf._loo_benchmark(r, np.ones(4, dtype=bool), cell, size_q)
    assert fb.tolist() == [True, False, False, True]
    assert bench[0] == pytest.approx((0.02 + 0.06) / 2)
    assert bench[1] == pytest.approx(0.04)
    assert bench[3] == pytest.approx((0.10 + 0.02) / 2)


# monthly panel and portfolios

def _monthly_market(rng, n_firms=60, n_days=520, daily_sd=0.002, sizes=None, drift=None):
    r = rng.normal(0.0, daily_sd, (n_firms, n_days))
    shares = np.ones(n_firms)[:, None] * 1e6 if sizes is None else np.asarray(sizes, dtype=float)[:, None]
    m0 = make_market(r, shares=np.broadcast_to(shares, r.shape), btm=rng.lognormal(size=(n_firms, 1)))
    if drift is None:
        return m0
    months = m0.dates.astype("datetime64[M]")
    for (f, mo), amount in drift.items():
        days = months == mo
        r[f, days] += amount / days.sum()
    return make_market(r, shares=np.broadcast_to(shares, r.shape), btm=m0.book_to_market[:, :1])


def _outcomes_for(members):
    """Aborted intents whose 90-day window expires in the given (permco, month) pairs."""
    rows = []
    for k, (permco, month) in enumerate(members):
        expiry = pd.Timestamp(str(month)) + pd.Timedelta(days=9)
        rows.append((f"I{k:04d}", permco, expiry - pd.Timedelta(days=90), 1))
    return pd.DataFrame(rows, columns=["intent_id", "permco", "file_date", "non_execution"])


def test_membership_holding_period(rng):
    m = _monthly_market(rng, n_firms=6, n_days=200)
    panel = pf.MonthlyPanel(m)
    out = _outcomes_for([(1, panel.months[2]), (3, panel.months[5])])
    out = pd.concat([out, out.iloc[:1].assign(intent_id="X", non_execution=0)], ignore_index=True)
    for H in (1, 3):
        mem = pf.membership(out, panel, H)
        assert mem.groupby("intent_id").size().to_dict() == {"I0000": H, "I0001": H}
        assert mem[mem.intent_id == "I0000"]["month_idx"].tolist() == list(range(2, 2 + H))
    with pytest.raises(FGEError):
        pf.membership(out, panel, 0)


def test_ctp_single_value(rng):
    m = _monthly_market(rng, n_firms=6, n_days=120)
    panel = pf.MonthlyPanel(m)
    adj = np.full(panel.ret.shape, np.nan)
    adj[2, 3] = 0.0032
    members = pd.DataFrame({"intent_id": ["a"], "permco": [m.permcos[2]], "month_idx": [3]})
    s = pf.calendar_portfolio(members, panel, adj, np.ones(adj.shape), "EW")
    assert s["excess_return"].tolist() == [0.0032]
    assert s["n_members"].tolist() == [1]


def test_ew_equals_vw_for_equal_sizes_and_vw_weights(rng):
    m = _monthly_market(rng)
    panel = pf.MonthlyPanel(m)
    adj, _, sizes = panel.adjusted_returns()
    members = pd.DataFrame({"intent_id": [f"i{k}" for k in range(40)],
                            "permco": rng.choice(m.permcos, 40), "month_idx": rng.integers(12, 24, 40)})
    ew = pf.calendar_portfolio(members, panel, adj, sizes, "EW")
    vw = pf.calendar_portfolio(members, panel, adj, np.ones_like(sizes), "VW")
    np.testing.assert_allclose(ew["excess_return"], vw["excess_return"], atol=1e-15)
    ones = pf.calendar_portfolio(members, panel, np.ones_like(adj), sizes * rng.uniform(1, 5, sizes.shape), "VW")
    assert np.abs(ones["excess_return"] - 1.0).max() < 1e-12
    with pytest.raises(FGEError):
        pf.calendar_portfolio(members, panel, adj, sizes, "XW")


def test_adjusted_returns_shape_and_fallback(rng):
    m = _monthly_market(rng, n_firms=30)
    panel = pf.MonthlyPanel(m)
    adj, fb, size = panel.adjusted_returns()
    assert adj.shape == panel.ret.shape
    # book-to-market lags six months and momentum needs eleven, so early months fall back
    assert fb[:, 1].all()
    assert np.isnan(adj[:, 0]).all()
    np.testing.assert_allclose(size[:, 5], panel.size[:, 4])


def test_momentum_skips_current_month(rng):
    m = _monthly_market(rng, n_firms=5, n_days=400)
    panel = pf.MonthlyPanel(m)
    want = np.prod(1 + panel.ret[:, 3:14], axis=1) - 1
    np.testing.assert_allclose(panel.momentum[:, 14], want, rtol=1e-12)


def test_planted_drift_recovered():
    rng = np.random.Generator(np.random.PCG64(99))
    n_firms, n_days = 1000, 600
    months = np.unique(pd.bdate_range("2020-01-01", periods=n_days).to_numpy().astype("datetime64[M]"))
    picks = [(int(f), mo) for mo in months[13:-1] for f in rng.choice(n_firms, 20, replace=False)]
    drift = {(f, mo): 0.0032 for f, mo in picks}
    m = _monthly_market(np.random.Generator(np.random.PCG64(1)), n_firms=n_firms, n_days=n_days, drift=drift)
    panel = pf.MonthlyPanel(m)
    adj, _, sizes = panel.adjusted_returns()
    members = pf.membership(_outcomes_for([(int(m.permcos[f]), mo) for f, mo in picks]), panel, 1)
    t = pf.alpha_test(pf.calendar_portfolio(members, panel, adj, sizes, "EW"))
    assert abs(t.mean - 0.0032) < 2 * t.std_error
    assert t.p_value < 0.001


def test_alpha_test_errors_and_units():
    with pytest.raises(DegenerateSampleError):
        pf.alpha_test(pf.series_from_values(np.full(24, 0.003)))
    with pytest.raises(InsufficientDataError):
        pf.alpha_test(pf.series_from_values(np.arange(11.0)))
    assert pf.bps(0.003221) == pytest.approx(32.21)
    assert math.isnan(pf.bps(float("nan")))


def test_alpha_test_null_size():
    # rejection rate at |t| >= 2 stays within three binomial sd of its nominal level
    n_months, n_seeds = 36, 1000
    rng = np.random.Generator(np.random.PCG64(2024))
    rejections = sum(abs(pf.alpha_test(pf.series_from_values(rng.normal(0, 0.01, n_months))).statistic) >= 2
                     for _ in range(n_seeds))
    nominal = t_tail(2.0, n_months - 1)
    assert rejections / n_seeds < nominal + 3 * math.sqrt(nominal * (1 - nominal) / n_seeds)


def test_size_split_partition_and_degenerate(rng):
    sizes = np.linspace(1e6, 5e7, 60)
    m = _monthly_market(rng, sizes=sizes)
    panel = pf.MonthlyPanel(m)
    adj, _, form = panel.adjusted_returns()
    members = pd.DataFrame({"intent_id": [f"i{k}" for k in range(400)],
                            "permco": rng.choice(m.permcos, 400), "month_idx": rng.integers(1, 23, 400)})
    res, series, tagged = pf.size_split_alphas(members, panel, adj, form)
    assert set(tagged["size_group"]) == {"small", "large"}
    assert len(tagged) == len(members)
    flat = np.ones_like(form)
    with pytest.raises(InsufficientDataError):
        pf.size_split_alphas(members, panel, adj, flat)


def test_size_split_concentrates_planted_large_drift():
    rng = np.random.Generator(np.random.PCG64(7))
    n_firms, n_days = 400, 560
    sizes = np.exp(rng.uniform(np.log(1e6), np.log(1e9), n_firms))
    months = np.unique(pd.bdate_range("2020-01-01", periods=n_days).to_numpy().astype("datetime64[M]"))
    picks = [(int(f), mo) for mo in months[13:-1] for f in rng.choice(n_firms, 30, replace=False)]
    big = sizes > np.median(sizes)
    drift = {(f, mo): 0.005 for f, mo in picks if big[f]}
    m = _monthly_market(rng, n_firms=n_firms, n_days=n_days, sizes=sizes, drift=drift)
    panel = pf.MonthlyPanel(m)
    adj, _, form = panel.adjusted_returns()
    members = pf.membership(_outcomes_for([(int(m.permcos[f]), mo) for f, mo in picks]), panel, 1)
    res, _, _ = pf.size_split_alphas(members, panel, adj, form)
    assert res["large"].p_value < 0.01
    assert res["large"].mean > res["small"].mean


def test_determinants_recover_planted_coefficient():
    # a 2-SE interval should hold the planted value in roughly 95% of draws
    n, hits, est = 1000, 0, []
    for seed in range(200):
        rng = np.random.Generator(np.random.PCG64(seed))
        feats = pd.DataFrame({"signal_magnitude": rng.uniform(0, 0.5, n), "illiquidity": rng.lognormal(size=n),
                              "prior_volatility": rng.uniform(0.005, 0.04, n),
                              "filing_gap_days": rng.integers(0, 91, n)})
        z = pf.standardize(feats.to_numpy(dtype=float))
        y = 0.003 - 0.0034 * z[:, 2] + rng.normal(0, 0.02, n)
        fit = pf.cross_sectional_determinants(y, feats)
        hits += abs(fit.coefficients[3] + 0.0034) < 2 * fit.standard_errors[3]
        est.append(fit.coefficients[3])
    assert fit.names == ("intercept", "signal_magnitude", "illiquidity", "prior_volatility", "filing_gap_days")
    assert hits >= 180
    assert abs(np.mean(est) + 0.0034) < 2 * np.std(est, ddof=1) / math.sqrt(len(est))
    assert np.allclose(z.mean(axis=0), 0, atol=1e-12) and np.allclose(z.std(axis=0), 1)


def test_determinants_null_and_duplicate(rng):
    n = 300
    feats = pd.DataFrame({"a": rng.standard_normal(n), "b": rng.standard_normal(n)})
    ts = np.array([np.abs(pf.cross_sectional_determinants(rng.standard_normal(n), feats).t_stats[1:]).mean()
                   for _ in range(100)])
    assert ts.mean() < 1.0  # E|t| under the null is about 0.8
    with pytest.raises(SingularDesignError):
        pf.cross_sectional_determinants(rng.standard_normal(n), feats.assign(c=feats["a"]))


# liquidity

def test_amihud_direct_formula():
    r = np.zeros((1, 5))
    r[0, 2] = -0.02
    m = make_market(r, price=100.0, volume=np.array([[0, 0, 1e4, 0, 0]]))
    assert pf.amihud(1, "2020-01", m) == pytest.approx(2e-8, rel=1e-12)
    zero = make_market(np.zeros((1, 5)), price=10.0, volume=10.0)
    assert pf.amihud(1, "2020-01", zero) == 0.0
    none = make_market(r, price=100.0, volume=0.0)
    with pytest.raises(InsufficientDataError):
        pf.amihud(1, "2020-01", none)


def test_amihud_brute_force_and_homogeneity(rng):
    r = rng.normal(0, 0.02, (1, 23))
    price = rng.uniform(10, 20, (1, 23))
    vol = rng.integers(0, 5000, (1, 23)).astype(float)
    m = make_market(r, price=price, volume=vol, start="2021-03-01")
    days = m.dates.astype("datetime64[M]") == np.datetime64("2021-03")
    want = np.mean([abs(a) / (p * v) for a, p, v, d in zip(r[0], price[0], vol[0], days) if d and v > 0])
    got = pf.amihud(1, "2021-03-15", m)
    assert got == pytest.approx(want, rel=1e-12)
    m2 = make_market(3 * r, price=price, volume=vol, start="2021-03-01")
    m3 = make_market(r, price=price, volume=4 * vol, start="2021-03-01")
    assert pf.amihud(1, "2021-03", m2) == pytest.approx(3 * got, rel=1e-12)
    assert pf.amihud(1, "2021-03", m3) == pytest.approx(got / 4, rel=1e-12)


def test_amihud_windows_match_table(rng):
    r = rng.normal(0, 0.02, (2, 80))
    m = make_market(r, price=12.0, volume=rng.integers(1, 100, (2, 80)).astype(float))
    aw = pf.AmihudWindows(m)
    tab = pf.amihud_table(m)
    got = aw.mean([1], ["2020-02-01"], ["2020-03-01"])[0]
    want = tab[(tab.permco == 1) & (tab.month == "2020-02")]["illiq"].iloc[0]
    assert got == pytest.approx(want, rel=1e-12)
    assert np.isnan(aw.mean([99], ["2020-02-01"], ["2020-03-01"])[0])
