"""Seeded synthetic universes with planted ground truth.

The generator writes the exact ingest schemas (four core tables, the three
link maps) plus ``ground_truth.csv``. Independent random streams are spawned
per table so that, e.g., changing ``n_intents`` leaves the factor and return
panels untouched.

Intents of one insider are spaced at least 100 calendar days apart, so the
greedy matcher reproduces the planted outcome of every intent exactly.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import FGEError
from .ingest import Universe, LinkageTables, write_table, INTENT_COLUMNS, EXECUTION_COLUMNS, \
    SECURITY_COLUMNS, FACTOR_COLUMNS, LINK_FILES

GENERATOR_NAME = "numpy.random.PCG64"
INTENT_SPACING_DAYS = 100
MIN_GAP_DAYS = 5
SM_CURVE_POWER = 8.0
AMIHUD_SCALE = 1e6


@dataclass
class SynthConfig:
    seed: int = 7
    n_firms: int = 500
    n_insiders: int = 2500
    n_intents: int = 10_000
    start_date: str = "2012-01-02"
    warmup_days: int = 300
    tail_days: int = 180
    abort_rate: float = 0.524
    partial_abort_share: float = 0.25
    late_exec_share: float = 0.2
    alpha: float = 0.0007
    betas: tuple[float, float, float, float] = (1.00656, 0.25, -0.15, 0.10)
    beta_sd: float = 0.0
    noise_sd: float = 0.01
    factor_sd: tuple[float, float, float, float] = (0.01, 0.005, 0.005, 0.006)
    mkt_drift: float = 0.0005
    rf: float = 0.0001
    car_intent: float = 0.001589
    car_premium: float = -0.012943
    abort_drift_monthly: float = 0.0032
    tau_amihud: float = 0.05
    sm_low: float = 0.0163
    sm_high: float = 0.5113
    breakage_rate: float = 0.0
    entangled: bool = True

    def validate(self) -> None:
        for name in ("abort_rate", "partial_abort_share", "late_exec_share", "breakage_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise FGEError(f"{name} must lie in [0, 1], got {v}")
        for name in ("n_firms", "n_insiders", "n_intents"):
            if getattr(self, name) < 1:
                raise FGEError(f"{name} must be >= 1")
        if self.noise_sd < 0:
            raise FGEError("noise_sd must be non-negative")
        per_insider = math.ceil(self.n_intents / self.n_insiders)
        years = per_insider * (INTENT_SPACING_DAYS + 60) / 365.25
        if years > 40:
            raise FGEError(f"infeasible config: {per_insider} intents per insider need ~{years:.0f} years")

    @classmethod
    def from_mapping(cls, values: dict) -> "SynthConfig":
        kwargs = {}
        fields = {f.name: f for f in dataclasses.fields(cls)}
        for k, v in values.items():
            if k not in fields:
                raise FGEError(f"unknown synth option {k!r}")
            default = getattr(cls(), k)
            if isinstance(default, bool):
                kwargs[k] = v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on")
            elif isinstance(default, tuple):
                kwargs[k] = tuple(float(x) for x in (v.split(",") if isinstance(v, str) else v))
            else:
                kwargs[k] = type(default)(v)
        return cls(**kwargs)


@dataclass
class SynthResult:
    universe: Universe
    ground_truth: dict[str, object]
    labels: pd.DataFrame = field(repr=False)
    firms: pd.DataFrame | None = field(default=None, repr=False)


def _sm_curve(u, low, high):
    # convex map of a rank quantile: decile means land on (low, high)
    p = SM_CURVE_POWER
    top = (1.0 - 0.9 ** (p + 1)) / (0.1 * (p + 1))
    bottom = 0.1 ** p / (p + 1)
    b = (high - low) / (top - bottom)
    a = low - b * bottom
    return a + b * np.asarray(u) ** p


def _weekday_on_or_after(days: np.ndarray) -> np.ndarray:
    # day numbers since 1970-01-01 (a Thursday); weekday 0 = Monday
    wd = (days + 3) % 7
    return days + np.where(wd == 5, 2, np.where(wd == 6, 1, 0))


def _streams(seed: int):
    names = ("factors", "firms", "returns", "volume", "intents", "executions", "links")
    return dict(zip(names, (np.random.Generator(np.random.PCG64(s))
                            for s in np.random.SeedSequence(seed).spawn(len(names)))))


def generate_universe(config: SynthConfig) -> SynthResult:
    config.validate()
    rng = _streams(config.seed)
    start = np.datetime64(config.start_date, "D").astype(np.int64)

    # insider schedules (calendar days)
    n_per = np.full(config.n_insiders, config.n_intents // config.n_insiders)
    n_per[: config.n_intents % config.n_insiders] += 1
    r_int = rng["intents"]
    insider_firm = r_int.integers(0, config.n_firms, config.n_insiders)
    first_day = start + int(config.warmup_days * 7 / 5) + r_int.integers(0, 120, config.n_insiders)
    owner = np.repeat(np.arange(config.n_insiders), n_per)
    spacing = INTENT_SPACING_DAYS + r_int.integers(0, 60, config.n_intents)
    # cumulative offsets restart for each insider
    csum = np.cumsum(spacing)
    seg_start = np.r_[0, np.cumsum(n_per)[:-1]][n_per > 0]
    offset = csum - np.repeat(csum[seg_start] - spacing[seg_start], n_per[n_per > 0])
    file_day = _weekday_on_or_after(first_day[owner] + offset - spacing[np.repeat(seg_start, n_per[n_per > 0])])
    last_day = int(file_day.max()) + 94
    n_cal = last_day - start + int(config.tail_days * 7 / 5) + 1
    cal = np.arange(start, start + n_cal)
    trading = cal[((cal + 3) % 7) < 5]
    n_days = len(trading)

    # factor panel
    r_f = rng["factors"]
    fsd = np.asarray(config.factor_sd)
    factors = r_f.standard_normal((n_days, 4)) * fsd
    factors[:, 0] += config.mkt_drift
    rf = np.full(n_days, config.rf)

    # firms
    r_firm = rng["firms"]
    betas = np.asarray(config.betas)[None, :] + config.beta_sd * r_firm.standard_normal((config.n_firms, 4))
    price0 = r_firm.uniform(10.0, 100.0, config.n_firms)
    shares_out = np.round(np.exp(r_firm.uniform(np.log(1e7), np.log(1e9), config.n_firms)))
    dollar_vol = np.exp(r_firm.uniform(np.log(2e5), np.log(2e6), config.n_firms))
    btm0 = np.exp(r_firm.normal(-0.5, 0.5, config.n_firms))
    permco = 10001 + np.arange(config.n_firms)

    # intents
    n = config.n_intents
    firm_of = insider_firm[owner]
    n_abort = int(math.floor(config.abort_rate * n + 0.5))
    u_sm = r_int.uniform(0.0, 1.0, n)
    if config.entangled:
        abort_idx = r_int.choice(n, n_abort, replace=False)
    else:
        w = np.exp(4.0 * u_sm)
        abort_idx = r_int.choice(n, n_abort, replace=False, p=w / w.sum())
    aborted = np.zeros(n, dtype=bool)
    aborted[abort_idx] = True
    proposed = np.round(np.exp(r_int.uniform(np.log(1e3), np.log(5e4), n)))
    gap_cal = r_int.integers(MIN_GAP_DAYS, 80, n)
    first_exec = _weekday_on_or_after(file_day + gap_cal)
    kind = np.where(aborted, np.where(r_int.uniform(size=n) < config.partial_abort_share, 1, 0), 2)
    # 2 executed, 1 partial abort, 0 zero-fill abort

    day_index = {int(d): i for i, d in enumerate(trading)}
    t_file = np.array([day_index[int(d)] for d in file_day])
    t_exec = np.array([day_index[int(d)] for d in first_exec])
    onep = 1.0 + factors[:, 0]
    # market excess compounded over (file, first exec]
    logc = np.r_[0.0, np.cumsum(np.log(onep))]
    cmer = np.expm1(logc[t_exec + 1] - logc[t_file + 1])
    has_fill = kind > 0
    if config.entangled:
        u = u_sm.copy()
        ex = np.nonzero(kind == 2)[0]
        ranks = np.argsort(np.argsort(cmer[ex], kind="mergesort"), kind="mergesort")
        u[ex] = (ranks + 0.5) / len(ex) if len(ex) else u[ex]
    else:
        u = u_sm
    sm_target = _sm_curve(u, config.sm_low, config.sm_high)
    held = np.maximum(np.round(proposed / sm_target), proposed)

    # executions
    r_ex = rng["executions"]
    ex_rows = []
    for i in range(n):
        if kind[i] == 0:
            if r_ex.uniform() < config.late_exec_share:
                d = int(_weekday_on_or_after(np.array([file_day[i] + 91 + r_ex.integers(0, 2)]))[0])
                ex_rows.append((i, d, float(max(1.0, np.round(proposed[i] * r_ex.uniform(0.2, 1.0))))))
            continue
        total = proposed[i] if kind[i] == 2 else max(1.0, np.floor(proposed[i] * r_ex.uniform(0.1, 0.9)))
        k = int(r_ex.integers(1, 4))
        k = int(min(k, total))
        cuts = np.sort(r_ex.choice(np.arange(1, int(total)), k - 1, replace=False)) if k > 1 else np.array([], int)
        parts = np.diff(np.r_[0, cuts, int(total)]).astype(float)
        later = first_exec[i] + np.sort(r_ex.integers(0, file_day[i] + 90 - first_exec[i] + 1, k - 1))
        later = _weekday_on_or_after(later)
        later = np.where(later > file_day[i] + 90, first_exec[i], later)
        dates = np.r_[first_exec[i], np.sort(later)]
        for d, q in zip(dates, parts):
            ex_rows.append((i, int(d), float(q)))

    # returns with planted event shocks and post-expiration drift
    r_ret = rng["returns"]
    noise = config.noise_sd * r_ret.standard_normal((config.n_firms, n_days))
    ret = rf[None, :] + config.alpha + betas @ factors.T + noise
    np.add.at(ret, (firm_of, t_file), config.car_intent)
    fill_i = np.nonzero(has_fill)[0]
    np.add.at(ret, (firm_of[fill_i], t_exec[fill_i]), config.car_intent - config.car_premium)
    expiry = file_day + 90
    exp_month = expiry.astype("datetime64[D]").astype("datetime64[M]")
    tmonth = trading.astype("datetime64[D]").astype("datetime64[M]")
    if config.abort_drift_monthly:
        # one drift per (firm, expiry month), however many aborts share it
        for f, mo in sorted(set(zip(firm_of[aborted].tolist(), exp_month[aborted].tolist()))):
            days = np.nonzero(tmonth == mo)[0]
            if len(days):
                ret[f, days] += config.abort_drift_monthly / len(days)
    price = price0[:, None] * np.cumprod(1.0 + ret, axis=1)

    r_vol = rng["volume"]
    volume = np.round(dollar_vol[:, None] / price * np.exp(0.3 * r_vol.standard_normal((config.n_firms, n_days))))
    volume = np.maximum(volume, 1.0)
    if config.tau_amihud:
        # post-expiration volume cut so that expected Amihud (x1e6) rises by tau
        sd_r = np.sqrt((betas ** 2 * fsd[None, :] ** 2).sum(axis=1) + config.noise_sd ** 2)
        base_illiq = math.sqrt(2.0 / math.pi) * sd_r / dollar_vol * AMIHUD_SCALE
        # overlapping windows of one firm are cut once, not compounded
        hit = np.zeros(volume.shape, dtype=bool)
        for i in np.nonzero(aborted)[0]:
            lo = np.searchsorted(trading, expiry[i], side="right")
            hi = np.searchsorted(trading, expiry[i] + 30, side="right")
            hit[firm_of[i], lo:hi] = True
        factor = (base_illiq / (base_illiq + config.tau_amihud))[:, None]
        volume = np.where(hit, np.maximum(np.round(volume * factor), 1.0), volume)
    btm = btm0[:, None] * np.exp(np.cumsum(0.002 * r_firm.standard_normal((config.n_firms, n_days)), axis=1))

    # tables
    dates64 = trading.astype("datetime64[D]").astype("datetime64[ns]")
    security = pd.DataFrame({
        "permco": np.repeat(permco, n_days),
        "date": np.tile(dates64, config.n_firms),
        "total_return": ret.ravel(),
        "price": price.ravel(),
        "volume": volume.ravel(),
        "shares_outstanding": np.repeat(shares_out, n_days),
        "book_to_market": btm.ravel(),
    })
    factor_df = pd.DataFrame({"date": dates64, "mkt_rf": factors[:, 0], "smb": factors[:, 1],
                              "hml": factors[:, 2], "umd": factors[:, 3], "rf": rf})

    r_link = rng["links"]
    company = np.array([f"C{p}" for p in permco])
    n_broken = int(math.floor(config.breakage_rate * n + 0.5))
    broken = np.zeros(n, dtype=bool)
    broken[r_link.choice(n, n_broken, replace=False)] = True
    intent_company = np.where(broken, np.char.add(company[firm_of], "X"), company[firm_of])
    person = np.array([f"P{k:06d}" for k in range(config.n_insiders)])
    intent_ids = np.array([f"F{k:07d}" for k in range(n)])
    intents = pd.DataFrame({
        "intent_id": intent_ids,
        "person_id": person[owner],
        "company_id": intent_company,
        "file_date": file_day.astype("datetime64[D]").astype("datetime64[ns]"),
        "proposed_shares": proposed,
        "shares_held": held,
    })
    ex_i = np.array([r[0] for r in ex_rows], dtype=np.int64)
    ex_day = np.array([r[1] for r in ex_rows], dtype=np.int64)
    px = price[firm_of[ex_i], np.searchsorted(trading, ex_day)]
    executions = pd.DataFrame({
        "exec_id": [f"E{k:08d}" for k in range(len(ex_rows))],
        "person_id": person[owner[ex_i]],
        "company_id": intent_company[ex_i],
        "transaction_date": ex_day.astype("datetime64[D]").astype("datetime64[ns]"),
        "shares_sold": np.array([r[2] for r in ex_rows], dtype=float),
        "price": np.round(px, 4),
    })

    director = np.char.replace(person, "P", "D")
    d2c_rows = [(director[owner[i]], intent_company[i]) for i in range(n)]
    d2c = sorted(set(d2c_rows) | {(director[k], company[insider_firm[k]]) for k in range(config.n_insiders)})
    links = LinkageTables(
        dict(zip(person, director)),
        {d: frozenset(c for dd, c in d2c if dd == d) for d in set(director)},
        dict(zip(company, (int(p) for p in permco))),
    )

    labels = pd.DataFrame({
        "intent_id": intent_ids, "permco": permco[firm_of], "aborted": aborted.astype(int),
        "kind": kind, "broken_link": broken.astype(int), "cmer": np.where(kind == 2, cmer, np.nan),
        "signal_magnitude": proposed / held,
    })
    ex_mask = kind == 2
    truth = {
        "seed": config.seed,
        "generator": GENERATOR_NAME,
        "n_firms": config.n_firms,
        "n_insiders": config.n_insiders,
        "n_intents": n,
        "n_aborted": int(aborted.sum()),
        "abort_share": aborted.sum() / n,
        "n_zero_fill_aborts": int((kind == 0).sum()),
        "n_partial_aborts": int((kind == 1).sum()),
        "n_stage3_breaks": n_broken,
        "alpha": config.alpha,
        "beta_mkt": float(np.mean(betas[:, 0])),
        "beta_smb": float(np.mean(betas[:, 1])),
        "beta_hml": float(np.mean(betas[:, 2])),
        "beta_umd": float(np.mean(betas[:, 3])),
        "noise_sd": config.noise_sd,
        "car_144_planted": config.car_intent,
        "car_4_planted": config.car_intent - config.car_premium,
        "car_premium_planted": config.car_premium,
        "cmer_mean_executed": float(cmer[ex_mask].mean()) if ex_mask.any() else float("nan"),
        "sm_decile1_target": config.sm_low,
        "sm_decile10_target": config.sm_high,
        "abort_drift_monthly": config.abort_drift_monthly,
        "tau_amihud_x1e6": config.tau_amihud,
        "entangled": int(config.entangled),
    }
    universe = Universe(intents, executions, security, factor_df, links,
                        {"intents": n, "executions": len(executions), "security_panel": len(security),
                         "factors": len(factor_df)})
    firms = pd.DataFrame({"permco": permco, "alpha": config.alpha, "beta_mkt": betas[:, 0],
                          "beta_smb": betas[:, 1], "beta_hml": betas[:, 2], "beta_umd": betas[:, 3]})
    return SynthResult(universe, truth, labels, firms)


def write_universe(result: SynthResult, directory) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    u = result.universe
    paths = {
        "intents": directory / "intents.csv",
        "executions": directory / "executions.csv",
        "security_panel": directory / "security_panel.csv",
        "factors": directory / "factors.csv",
    }
    write_table(u.intents, paths["intents"], INTENT_COLUMNS)
    write_table(u.executions, paths["executions"], EXECUTION_COLUMNS)
    write_table(u.security, paths["security_panel"], SECURITY_COLUMNS)
    write_table(u.factors, paths["factors"], FACTOR_COLUMNS)
    links = u.links
    tables = {
        "person_to_director": sorted(links.person_to_director.items()),
        "director_to_company": sorted((d, c) for d, cs in links.director_to_company.items() for c in cs),
        "company_to_permco": sorted(links.company_to_permco.items()),
    }
    for key, (fname, cols) in LINK_FILES.items():
        pd.DataFrame(tables[key], columns=list(cols)).to_csv(directory / fname, index=False, lineterminator="\n")
        paths[key] = directory / fname
    gt = pd.DataFrame({"key": list(result.ground_truth), "value": [str(v) for v in result.ground_truth.values()]})
    gt.to_csv(directory / "ground_truth.csv", index=False, lineterminator="\n")
    paths["ground_truth"] = directory / "ground_truth.csv"
    return paths


def generate(config: SynthConfig, directory) -> SynthResult:
    result = generate_universe(config)
    write_universe(result, directory)
    return result


# classifier datasets

N_FEATURES = 6


def generate_entangled(n: int, prevalence: float = 0.0308, seed: int = 0):
    """Labels independent of features: per-class feature distributions coincide."""
    rng = np.random.Generator(np.random.PCG64(seed))
    X = rng.standard_normal((n, N_FEATURES))
    X[:, 1] = rng.exponential(1.0, n)
    y = np.zeros(n, dtype=np.int64)
    y[rng.choice(n, int(math.floor(prevalence * n + 0.5)), replace=False)] = 1
    return X, y


def generate_separable(n: int, prevalence: float = 0.0308, seed: int = 0):
    """Feature 0 has disjoint supports: [0, 1] for label 0 and [2, 3] for label 1."""
    X, y = generate_entangled(n, prevalence, seed)
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    X[:, 0] = rng.uniform(0.0, 1.0, n) + 2.0 * y
    return X, y


def generate_causal_frame(n: int, tau=0.05, seed: int = 0, confounding: float = 1.0,
                          noise_sd: float = 1.0, randomized: bool = False) -> pd.DataFrame:
    """Partially linear design with linear confounding through four controls.

    ``tau`` is either a constant or a callable of the dollar-value modifier.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    W = rng.standard_normal((n, 4))
    sm = rng.uniform(0.01, 0.8, n)
    dollar = np.exp(rng.uniform(np.log(1e4), np.log(5e6), n))
    gamma = np.array([0.8, -0.5, 0.4, 0.0]) * confounding
    logit = 0.0 if randomized else W @ gamma
    p = 1.0 / (1.0 + np.exp(-logit)) * np.ones(n)
    T = (rng.uniform(size=n) < p).astype(float)
    delta = np.array([1.0, 0.5, -0.7, 0.3]) * confounding
    effect = tau(dollar) if callable(tau) else np.full(n, float(tau))
    Y = effect * T + W @ delta + noise_sd * rng.standard_normal(n)
    frame = pd.DataFrame({"Y": Y, "T": T, "signal_magnitude": sm, "dollar_value": dollar,
                          "prior_volatility": W[:, 0], "log_size": W[:, 1], "prior_illiquidity": W[:, 2],
                          "cmer": W[:, 3]})
    frame.attrs["true_effect"] = effect
    return frame
