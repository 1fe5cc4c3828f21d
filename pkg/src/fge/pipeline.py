"""Stage runners behind the command-line interface.

Every stage reads its inputs from files (the universe CSVs or an earlier
stage's outputs in the output directory) and writes CSV outputs plus a
``summary_<stage>.csv`` of key/value results that the report stage merges.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import causal, eventstudy, ingest, matcher, mlaudit, portfolio, report, stats, synth
from .errors import DependencyError, FGEError

log = logging.getLogger(__name__)

STAGES = ("synth", "ingest", "match", "eventstudy", "portfolio", "audit", "causal", "report")
UNIVERSE_FILES = {"intents": "intents.csv", "executions": "executions.csv",
                  "security": "security_panel.csv", "factors": "factors.csv"}


def _floats(v) -> tuple[float, ...]:
    if isinstance(v, str):
        return tuple(float(x) for x in v.replace(" ", "").split(",") if x)
    return tuple(float(x) for x in v)


@dataclass
class RunConfig:
    out: Path = Path("fge_out")
    intents: Path | None = None
    executions: Path | None = None
    security: Path | None = None
    factors: Path | None = None
    links_dir: Path | None = None
    seed: int = 7
    threads: int = 1
    epsilon_shares: float = 0.0
    min_obs: int = eventstudy.DEFAULT_MIN_OBS
    car_window: tuple[float, ...] = eventstudy.CAR_WINDOW
    holding_months: int = 1
    smote_alpha: tuple[float, ...] = mlaudit.DEFAULT_ALPHAS
    pos_weight: tuple[float, ...] = mlaudit.DEFAULT_WEIGHTS
    dml_folds: int = 5
    synth: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.out = Path(self.out)
        for name in ("intents", "executions", "security", "factors", "links_dir"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, Path(v))
        self.seed, self.threads = int(self.seed), int(self.threads)
        self.min_obs, self.holding_months, self.dml_folds = int(self.min_obs), int(self.holding_months), int(self.dml_folds)
        self.epsilon_shares = float(self.epsilon_shares)
        self.car_window = tuple(int(x) for x in _floats(self.car_window))
        self.smote_alpha, self.pos_weight = _floats(self.smote_alpha), _floats(self.pos_weight)
        if not self.smote_alpha or not self.pos_weight:
            raise FGEError("SMOTE alpha and class-weight grids must be non-empty")
        if len(self.car_window) != 2:
            raise FGEError("car_window needs two offsets, e.g. 0,2")

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs, synth_opts = {}, {}
        for k, v in values.items():
            k = k.replace("-", "_")
            if k.startswith("synth."):
                synth_opts[k[len("synth."):]] = v
            elif k in names and k != "synth":
                kwargs[k] = v
            else:
                raise FGEError(f"unknown configuration key {k!r}")
        return cls(synth=synth_opts, **kwargs)

    def path(self, name: str) -> Path:
        given = getattr(self, name)
        return given if given is not None else self.out / "universe" / UNIVERSE_FILES[name]

    @property
    def universe_dir(self) -> Path:
        return self.links_dir if self.links_dir is not None else self.path("intents").parent

    def canonical(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "out"}
        return {k: (str(v) if isinstance(v, Path) else list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.canonical(), sort_keys=True).encode()).hexdigest()


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FGEError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        values[k.strip()] = v.strip()
    return values


# file helpers

def _require(*paths: Path) -> None:
    for p in paths:
        if not Path(p).exists():
            raise DependencyError(f"missing input {p}; run the stage that produces it first")


def _write(df: pd.DataFrame, path: Path) -> Path:
    out = df.copy()
    for c in out.columns:
        if pd.api.types.is_datetime64_any_dtype(out[c]):
            out[c] = out[c].dt.strftime(ingest.DATE_FORMAT)
    out.to_csv(path, index=False, lineterminator="\n")
    return path


def _write_summary(values: dict[str, float], path: Path) -> Path:
    return _write(pd.DataFrame({"key": list(values), "value": [float(v) for v in values.values()]}), path)


def _read_summary(path: Path) -> dict[str, float]:
    df = pd.read_csv(path)
    return dict(zip(df["key"], df["value"].astype(float)))


def _read_dates(path: Path, cols) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"intent_id": str, "exec_id": str, "person_id": str, "company_id": str})
    for c in cols:
        df[c] = pd.to_datetime(df[c], format=ingest.DATE_FORMAT)
    return df


def read_outcomes(path: Path) -> pd.DataFrame:
    df = _read_dates(path, ["file_date", "first_exec_date"])
    df["gap_days"] = df["gap_days"].astype("Int64")
    return df


def read_eventstudy(path: Path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"intent_id": str, "excluded": str}, keep_default_na=False,
                     na_values={c: [""] for c in ("cmer", "gap_days", "car_144", "car_4", "alpha", "beta_mkt",
                                                    "beta_smb", "beta_hml", "beta_umd", "residual_sd",
                                                    "pre_filing_runup")})
    return df


def _market(cfg: RunConfig) -> eventstudy.MarketData:
    _require(cfg.path("security"), cfg.path("factors"))
    sec = ingest.read_table(cfg.path("security"), ingest.SECURITY_COLUMNS, key=("permco", "date"))
    fac = ingest.read_table(cfg.path("factors"), ingest.FACTOR_COLUMNS, key=("date",))
    return eventstudy.MarketData(sec, fac)


def _analysis_sample(cfg: RunConfig) -> pd.DataFrame:
    _require(cfg.out / "outcomes.csv")
    outcomes, _ = ingest.apply_significance_filter(read_outcomes(cfg.out / "outcomes.csv"))
    return outcomes


# stages: each returns {output name: path} and a row-count dict

def run_synth(cfg: RunConfig):
    opts = {"seed": cfg.seed, **cfg.synth}
    result = synth.generate_universe(synth.SynthConfig.from_mapping(opts))
    paths = synth.write_universe(result, cfg.out / "universe")
    return paths, dict(result.universe.row_counts)


def run_ingest(cfg: RunConfig):
    paths = [cfg.path(k) for k in UNIVERSE_FILES]
    _require(*paths)
    u = ingest.load_universe(*paths, links_dir=cfg.universe_dir)
    li, le, reports = ingest.link_identities(u.intents, u.executions, u.links)
    out = {
        "linked_intents": _write(li, cfg.out / "linked_intents.csv"),
        "linked_executions": _write(le, cfg.out / "linked_executions.csv"),
        "attrition": _write(pd.DataFrame([{**dataclasses.asdict(r), "n_output": r.n_output} for r in reports]),
                            cfg.out / "attrition.csv"),
    }
    return out, {**u.row_counts, "linked_intents": len(li), "linked_executions": len(le)}


def run_match(cfg: RunConfig):
    _require(cfg.out / "linked_intents.csv", cfg.out / "linked_executions.csv")
    li = _read_dates(cfg.out / "linked_intents.csv", ["file_date"])
    le = _read_dates(cfg.out / "linked_executions.csv", ["transaction_date"])
    alloc, outcomes = matcher.match_greedy(li, le, cfg.epsilon_shares)
    audit = matcher.audit_allocations(li, le, alloc)
    summary = {"labels.opacity": float(outcomes["non_execution"].mean()),
               "match.n_intents": len(outcomes), **{f"match.{k}": v for k, v in audit.items()}}
    out = {
        "allocations": _write(alloc, cfg.out / "allocations.csv"),
        "outcomes": _write(outcomes, cfg.out / "outcomes.csv"),
        "summary": _write_summary(summary, cfg.out / "summary_match.csv"),
    }
    return out, {"allocations": len(alloc), "outcomes": len(outcomes)}


def _describe(prefix: str, x) -> dict[str, float]:
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return {}
    return {f"{prefix}.mean": x.mean(), f"{prefix}.std": x.std(ddof=1) if x.size > 1 else float("nan"),
            f"{prefix}.q25": np.quantile(x, 0.25), f"{prefix}.median": np.median(x),
            f"{prefix}.q75": np.quantile(x, 0.75)}


def run_eventstudy(cfg: RunConfig):
    outcomes = _analysis_sample(cfg)
    market = _market(cfg)
    es = eventstudy.run_event_study(outcomes, market, cfg.min_obs, cfg.car_window)
    summary: dict[str, float] = {}
    ok = es["excluded"] == ""
    executed = (outcomes["status"] == matcher.Status.FULLY.value).to_numpy()
    cm = es.loc[executed & ok.to_numpy() & np.isfinite(es["cmer"].to_numpy()), "cmer"].to_numpy()
    if cm.size > 1:
        t = stats.one_sample_t(cm)
        summary.update({"cmer.mean": t.mean, "cmer.se": t.std_error, "cmer.t": t.statistic, "cmer.n": t.n})
    valid = es[ok & es["car_4"].notna()]
    if len(valid) > 1:
        t = eventstudy.paired_information_premium(valid)
        summary.update({"car.car144": valid["car_144"].mean(), "car.car4": valid["car_4"].mean(),
                        "car.diff": t.mean, "car.t": t.statistic, "car.p": t.p_value, "car.n": t.n})
    good = es[ok]
    for name, col in (("car144", "car_144"), ("car4", "car_4"), ("alpha", "alpha"), ("beta", "beta_mkt")):
        summary.update(_describe(f"desc.{name}", good[col]))
    dec_rows = executed & ok.to_numpy() & np.isfinite(es["cmer"].to_numpy())
    out = {"eventstudy": _write(es, cfg.out / "eventstudy.csv")}
    if dec_rows.sum() >= 10:
        deciles = eventstudy.decile_table(es.loc[dec_rows, "cmer"], outcomes.loc[dec_rows, "signal_magnitude"])
        summary["sm.decile1"] = deciles["mean_signal_magnitude"].iloc[0]
        summary["sm.decile10"] = deciles["mean_signal_magnitude"].iloc[-1]
        out["deciles"] = _write(deciles, cfg.out / "deciles.csv")
    out["summary"] = _write_summary(summary, cfg.out / "summary_eventstudy.csv")
    return out, {"eventstudy": len(es), "excluded": int((~ok).sum())}


def _test_row(name, t: stats.TestResult, n_months):
    return {"portfolio": name, "alpha_bps": portfolio.bps(t.mean), "se": t.std_error, "t": t.statistic,
            "p": t.p_value, "n_months": n_months}


def run_portfolio(cfg: RunConfig):
    outcomes = _analysis_sample(cfg)
    _require(cfg.out / "eventstudy.csv")
    es = read_eventstudy(cfg.out / "eventstudy.csv").set_index("intent_id")
    market = _market(cfg)
    panel = portfolio.MonthlyPanel(market)
    adj, fallback, sizes = panel.adjusted_returns()
    members = portfolio.membership(outcomes, panel, cfg.holding_months)
    summary: dict[str, float] = {"ctp.fallback_share": float(fallback[np.isfinite(adj)].mean())}
    series, alpha_rows = [], []
    for w in ("EW", "VW"):
        s = portfolio.calendar_portfolio(members, panel, adj, sizes, w)
        series.append(s)
        t = portfolio.alpha_test(s)
        alpha_rows.append(_test_row(w, t, len(s)))
        summary.update({f"ctp.{w}.alpha": portfolio.bps(t.mean), f"ctp.{w}.se": t.std_error,
                        f"ctp.{w}.t": t.statistic, f"ctp.{w}.p": t.p_value})
    split, split_series, _ = portfolio.size_split_alphas(members, panel, adj, sizes, "EW")
    for g in ("small", "large"):
        t = split[g]
        alpha_rows.append(_test_row(f"EW-{g}", t, len(split_series[g])))
        summary.update({f"size.{g}.alpha": portfolio.bps(t.mean), f"size.{g}.t": t.statistic,
                        f"size.{g}.p": t.p_value})

    # per-intent alpha: mean adjusted return over the holding months
    rows_f = market.firm_rows(members["permco"])
    members = members.assign(adj=adj[rows_f, members["month_idx"].to_numpy()])
    per_intent = members.groupby("intent_id", sort=True)["adj"].mean()
    ab = outcomes.set_index("intent_id").loc[per_intent.index]
    aw = portfolio.AmihudWindows(market)
    gap = ab["gap_days"].astype("Float64").fillna(matcher.WINDOW_DAYS).to_numpy(dtype=float)
    feats = pd.DataFrame({
        "signal_magnitude": ab["signal_magnitude"].to_numpy(dtype=float),
        "illiquidity": portfolio.prior_illiquidity(ab.reset_index(), aw) * 1e6,
        "prior_volatility": es["residual_sd"].reindex(per_intent.index).to_numpy(dtype=float),
        "filing_gap_days": gap,
    })
    y = per_intent.to_numpy(dtype=float)
    keep = np.isfinite(y) & np.isfinite(feats.to_numpy()).all(axis=1)
    fit = portfolio.cross_sectional_determinants(y[keep], feats.loc[keep].reset_index(drop=True))
    det = pd.DataFrame({"variable": fit.names, "coef": fit.coefficients, "se": fit.standard_errors,
                        "t": fit.t_stats, "p": fit.p_values()})
    for r in det.itertuples(index=False):
        summary.update({f"det.{r.variable}.coef": r.coef, f"det.{r.variable}.se": r.se,
                        f"det.{r.variable}.t": r.t, f"det.{r.variable}.p": r.p})
    amihud = portfolio.amihud_table(market)
    out = {
        "ctp_series": _write(pd.concat(series, ignore_index=True), cfg.out / "ctp_series.csv"),
        "alphas": _write(pd.DataFrame(alpha_rows), cfg.out / "alphas.csv"),
        "determinants": _write(det, cfg.out / "determinants.csv"),
        "amihud": _write(amihud, cfg.out / "amihud.csv"),
        "summary": _write_summary(summary, cfg.out / "summary_portfolio.csv"),
    }
    return out, {"members": len(members), "determinant_rows": int(keep.sum()), "amihud": len(amihud)}


def run_audit(cfg: RunConfig):
    outcomes = _analysis_sample(cfg)
    _require(cfg.out / "eventstudy.csv")
    es = read_eventstudy(cfg.out / "eventstudy.csv")
    market = _market(cfg)
    ds = mlaudit.assemble_dataset(outcomes, es, mlaudit.market_features(outcomes, market))
    Xtr, ytr = ds.arrays("train")
    Xte, yte = ds.arrays("test")
    settings = mlaudit.ModelSettings(n_jobs=cfg.threads)
    alpha, weight = max(cfg.smote_alpha), max(cfg.pos_weight)
    reports = mlaudit.run_audit(Xtr, ytr, Xte, yte, alpha, weight, cfg.seed, settings=settings)
    table = mlaudit.audit_table(reports)
    sweep = mlaudit.opacity_sweep(Xtr, ytr, Xte, yte, cfg.smote_alpha, cfg.pos_weight, cfg.seed, settings=settings)
    boosted = reports["WeightedBoostedTrees"]
    conf = pd.DataFrame({"true_class": ["executed", "aborted"],
                         "pred_executed": boosted.confusion[:, 0], "pred_aborted": boosted.confusion[:, 1],
                         "n_executed": boosted.counts[:, 0], "n_aborted": boosted.counts[:, 1]})
    summary = {"labels.prevalence": ds.prevalence, "audit.n_train": len(ytr), "audit.n_test": len(yte),
               "cm.tn": boosted.confusion[0, 0], "cm.fp": boosted.confusion[0, 1],
               "cm.fn": boosted.confusion[1, 0], "cm.tp": boosted.confusion[1, 1],
               "cm.precision0": boosted.precision[0], "cm.recall0": boosted.recall[0], "cm.f1_0": boosted.f1[0],
               "cm.precision1": boosted.precision[1], "cm.recall1": boosted.recall[1], "cm.f1_1": boosted.f1[1],
               "cm.accuracy": boosted.accuracy, "cm.roc_auc": boosted.roc_auc,
               "sweep.tpr": float(sweep["tpr"].max()), "sweep.fn": float(sweep["fn_rate"].min())}
    for r in table.itertuples(index=False):
        summary.update({f"audit.{r.paradigm}.pr_auc": r.pr_auc, f"audit.{r.paradigm}.recall_abort": r.recall_abort,
                        f"audit.{r.paradigm}.precision_abort": r.precision_abort})
    for reason, n in ds.dropped.items():
        summary[f"audit.dropped.{reason}"] = n
    out = {
        "audit_report": _write(table, cfg.out / "audit_report.csv"),
        "opacity_sweep": _write(sweep, cfg.out / "opacity_sweep.csv"),
        "confusion": _write(conf, cfg.out / "confusion.csv"),
        "summary": _write_summary(summary, cfg.out / "summary_audit.csv"),
    }
    return out, {"train": len(ytr), "test": len(yte), "sweep": len(sweep)}


def run_causal(cfg: RunConfig):
    outcomes = _analysis_sample(cfg)
    _require(cfg.out / "eventstudy.csv")
    es = read_eventstudy(cfg.out / "eventstudy.csv")
    market = _market(cfg)
    frame, dropped = causal.build_causal_frame(outcomes, es, market)
    estimates = [causal.dml_partial_linear(frame, cfg.dml_folds, cfg.seed), causal.x_learner(frame, cfg.seed)]
    rep = causal.causal_report(estimates)
    cons = causal.consensus(estimates)
    summary: dict[str, float] = {"hte.n": len(frame), **{f"hte.dropped.{k}": v for k, v in dropped.items()}}
    for r in rep.itertuples(index=False):
        summary.update({f"hte.{r.estimator}.ate": r.ate, f"hte.{r.estimator}.tail": r.tail_multiplier})
    for r in cons.itertuples(index=False):
        summary[f"hte.{r.estimator}.rho"] = r.rho
    out = {
        "causal_report": _write(rep, cfg.out / "causal_report.csv"),
        "cate_curve": _write(causal.curve_table(estimates), cfg.out / "cate_curve.csv"),
        "consensus": _write(cons, cfg.out / "consensus.csv"),
        "summary": _write_summary(summary, cfg.out / "summary_causal.csv"),
    }
    return out, {"frame": len(frame)}


def run_report(cfg: RunConfig):
    needed = [cfg.out / f"summary_{s}.csv" for s in ("match", "eventstudy", "portfolio", "audit", "causal")]
    _require(*needed)
    merged: dict[str, float] = {}
    for p in needed:
        merged.update(_read_summary(p))
    paths = report.write_report(merged, cfg.out)
    return paths, {"comparison": len(report.REFERENCE)}


RUNNERS = {"synth": run_synth, "ingest": run_ingest, "match": run_match, "eventstudy": run_eventstudy,
           "portfolio": run_portfolio, "audit": run_audit, "causal": run_causal, "report": run_report}


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def update_manifest(cfg: RunConfig, stage: str, outputs: dict, counts: dict, wall: float) -> Path:
    path = cfg.out / "manifest.json"
    manifest = json.loads(path.read_text()) if path.exists() else {}
    if manifest.get("config_hash") != cfg.digest():
        manifest = {}
    manifest.update({"config_hash": cfg.digest(), "seed": cfg.seed, "generator": synth.GENERATOR_NAME,
                     "config": cfg.canonical()})
    files = {}
    for p in outputs.values():
        p = Path(p)
        files[str(p.relative_to(cfg.out))] = _sha256(p)
    manifest.setdefault("stages", {})[stage] = {
        "outputs": dict(sorted(files.items())),
        "row_counts": {k: int(v) for k, v in counts.items()},
        "wall_time_s": round(wall, 3),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_stage(stage: str, cfg: RunConfig) -> dict:
    cfg.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    log.info("stage %s starting", stage)
    outputs, counts = RUNNERS[stage](cfg)
    wall = time.perf_counter() - t0
    update_manifest(cfg, stage, outputs, counts, wall)
    log.info("stage %s done in %.2fs: %s", stage, wall, counts)
    return outputs


def run_all(cfg: RunConfig) -> None:
    stages = list(STAGES)
    if cfg.intents is not None:
        stages.remove("synth")
    for s in stages:
        run_stage(s, cfg)
