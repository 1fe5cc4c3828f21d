"""Treatment effect of non-execution on the change in illiquidity.

Estimators:

* partially linear double machine learning with K-fold cross-fitting
  (elastic-net nuisances, final-stage OLS of outcome residual on treatment
  residual, heterogeneity through interactions with standardized modifiers);
* an X-learner with per-arm outcome models and propensity-weighted blending.

Effects are reported in the units of Y: Amihud ratio x 1e6 per intent.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from . import stats
from .errors import FGEError, InsufficientDataError
from .eventstudy import MarketData
from .matcher import WINDOW_DAYS
from .mlaudit.linear import ElasticNetLinear, ElasticNetLogistic
from .portfolio import AmihudWindows, prior_illiquidity

log = logging.getLogger(__name__)

MODIFIERS = ("signal_magnitude", "dollar_value")
CONTROLS = ("prior_volatility", "log_size", "prior_illiquidity", "cmer")
CURVE_VARIABLE = "dollar_value"
TAIL_THRESHOLD = 1e6
GRID_POINTS = 50
GRID_QUANTILES = (0.01, 0.99)
POST_WINDOW_DAYS = 30
PRIOR_WINDOW_DAYS = 365
PROPENSITY_CLIP = (0.01, 0.99)
AMIHUD_SCALE = 1e6
Z95 = 1.959963984540054
MAX_REFOLDS = 10

CAUSAL_COLUMNS = ["estimator", "ate", "se", "ci_low", "ci_high", "tail_multiplier"]
CURVE_COLUMNS = ["estimator", "x", "tau", "ci_low", "ci_high"]


@dataclass
class TreatmentEffectEstimate:
    estimator: str
    ate: float
    se: float
    curve: pd.DataFrame                      # x, tau, ci_low, ci_high
    effect_fn: Callable[[np.ndarray], np.ndarray]
    sample_effects: np.ndarray               # tau-hat at every sample row
    x_range: tuple[float, float]
    details: dict = field(default_factory=dict)

    @property
    def ci(self) -> tuple[float, float]:
        return self.ate - Z95 * self.se, self.ate + Z95 * self.se


def build_causal_frame(outcomes: pd.DataFrame, eventstudy: pd.DataFrame, market: MarketData,
                       post_days: int = POST_WINDOW_DAYS):
    """One row per intent with computable pre- and post-window Amihud.

    Y = mean Amihud over the ``post_days`` calendar days after the window
    expires minus the mean over the 12 months before filing (both x 1e6).
    Returns (frame, dropped-count dict).
    """
    aw = AmihudWindows(market)
    expiry = outcomes["file_date"] + pd.Timedelta(days=WINDOW_DAYS)
    post_end = expiry + pd.Timedelta(days=post_days)
    post = aw.mean(outcomes["permco"], expiry, post_end, include_start=False, include_end=True) * AMIHUD_SCALE
    prior = prior_illiquidity(outcomes, aw) * AMIHUD_SCALE
    covered = post_end.to_numpy().astype("datetime64[D]").astype(np.int64) <= market.day[-1]
    rows = market.firm_rows(outcomes["permco"])
    t = np.clip(market.day0(outcomes["file_date"]) - 1, 0, None)
    r = np.clip(rows, 0, None)
    price = market.price[r, t]
    cap = price * market.shares_outstanding[r, t]
    es = eventstudy.set_index("intent_id").reindex(outcomes["intent_id"])
    with np.errstate(divide="ignore", invalid="ignore"):
        frame = pd.DataFrame({
            "intent_id": outcomes["intent_id"].to_numpy(),
            "Y": post - prior,
            "T": outcomes["non_execution"].to_numpy(dtype=float),
            "signal_magnitude": outcomes["signal_magnitude"].to_numpy(dtype=float),
            "dollar_value": outcomes["proposed_shares"].to_numpy(dtype=float) * price,
            "prior_volatility": es["residual_sd"].to_numpy(dtype=float),
            "log_size": np.log(cap),
            "prior_illiquidity": prior,
            "cmer": es["pre_filing_runup"].to_numpy(dtype=float),
        })
    dropped = {"post_window_beyond_panel": int((~covered).sum())}
    keep = covered.copy()
    for col in ("Y",) + MODIFIERS + CONTROLS:
        bad = keep & ~np.isfinite(frame[col].to_numpy(dtype=float))
        if bad.any():
            dropped[f"missing_{col}"] = int(bad.sum())
        keep &= ~bad
    return frame.loc[keep].reset_index(drop=True), dropped


def _standardize(X, ref=None):
    ref = X if ref is None else ref
    mu, sd = ref.mean(axis=0), ref.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (X - mu) / sd, mu, sd


def assign_folds(T, k: int, seed: int) -> np.ndarray:
    """Random fold labels 0..k-1 such that every training complement holds both arms."""
    T = np.asarray(T)
    n = len(T)
    if min(int((T == 1).sum()), int((T == 0).sum())) < k:
        raise InsufficientDataError(f"each treatment arm needs at least {k} rows")
    rng = np.random.Generator(np.random.PCG64(seed))
    for attempt in range(MAX_REFOLDS):
        folds = np.empty(n, dtype=np.int64)
        folds[rng.permutation(n)] = np.arange(n) % k
        if all(len(np.unique(T[(folds != f)])) == 2 and len(np.unique(T[folds == f])) == 2 for f in range(k)):
            return folds
        warnings.warn(f"fold draw {attempt} left a single-arm fold; refolding", RuntimeWarning, stacklevel=2)
    raise FGEError("could not form folds with both treatment arms")


@dataclass
class NuisanceLearners:
    l1: float = 1e-4
    l2: float = 1e-4

    def outcome(self):
        return ElasticNetLinear(self.l1, self.l2)

    def propensity(self):
        return ElasticNetLogistic(self.l1, self.l2, max_iter=2000, tol=1e-6)


def cross_fit(frame: pd.DataFrame, folds: np.ndarray, learners: NuisanceLearners = NuisanceLearners(),
              controls=CONTROLS):
    """Out-of-fold predictions of E[Y|W] and E[T|W]."""
    W, _, _ = _standardize(frame[list(controls)].to_numpy(dtype=float))
    Y = frame["Y"].to_numpy(dtype=float)
    T = frame["T"].to_numpy(dtype=float)
    m_y = np.empty(len(Y))
    m_t = np.empty(len(Y))
    for f in np.unique(folds):
        tr, te = folds != f, folds == f
        m_y[te] = learners.outcome().fit(W[tr], Y[tr]).predict(W[te])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            m_t[te] = learners.propensity().fit(W[tr], T[tr]).predict_proba(W[te])
    return m_y, m_t


def _final_stage(y_res, t_res, Z):
    fit = stats.ols(y_res, np.column_stack([np.ones(len(t_res)), t_res]), names=("intercept", "T"))
    het = stats.ols(y_res, np.column_stack([np.ones(len(t_res)), t_res, t_res[:, None] * Z]))
    return fit, het


def _curve_grid(x):
    lo, hi = np.quantile(x, GRID_QUANTILES)
    return np.linspace(lo, hi, GRID_POINTS)


def _modifier_matrix(frame, modifiers):
    return frame[list(modifiers)].to_numpy(dtype=float)


def dml_partial_linear(frame: pd.DataFrame, k: int = 5, seed: int = 0,
                       learners: NuisanceLearners = NuisanceLearners(), modifiers=MODIFIERS,
                       curve_variable: str = CURVE_VARIABLE, controls=CONTROLS,
                       nuisance=None) -> TreatmentEffectEstimate:
    """Cross-fitted partialling-out estimator with a linear CATE in the modifiers.

    ``nuisance`` may pass precomputed (m_y, m_t) out-of-fold predictions.
    """
    Y = frame["Y"].to_numpy(dtype=float)
    T = frame["T"].to_numpy(dtype=float)
    folds = assign_folds(T, k, seed)
    m_y, m_t = nuisance if nuisance is not None else cross_fit(frame, folds, learners, controls)
    y_res = Y - m_y
    t_res = T - m_t
    y_res -= y_res.mean()
    t_res -= t_res.mean()
    Xm = _modifier_matrix(frame, modifiers)
    Z, mu, sd = _standardize(Xm)
    fit, het = _final_stage(y_res, t_res, Z)
    ate, se = float(fit.coefficients[1]), float(fit.standard_errors[1])
    theta = het.coefficients[1:]
    cov = het.covariance[1:, 1:]
    j = list(modifiers).index(curve_variable)

    def design(x):
        z = np.zeros((len(x), len(modifiers)))
        z[:, j] = (np.asarray(x, dtype=float) - mu[j]) / sd[j]
        return np.column_stack([np.ones(len(x)), z])

    def effect_fn(x):
        return design(np.atleast_1d(x)) @ theta

    grid = _curve_grid(Xm[:, j])
    D = design(grid)
    tau = D @ theta
    half = Z95 * np.sqrt(np.einsum("ij,jk,ik->i", D, cov, D))
    curve = pd.DataFrame({"x": grid, "tau": tau, "ci_low": tau - half, "ci_high": tau + half})
    sample = np.column_stack([np.ones(len(Z)), Z]) @ theta
    return TreatmentEffectEstimate("Linear DML", ate, se, curve, effect_fn, sample,
                                   (float(Xm[:, j].min()), float(Xm[:, j].max())),
                                   {"folds": folds, "m_y": m_y, "m_t": m_t, "t_res": t_res, "y_res": y_res})


def x_learner(frame: pd.DataFrame, seed: int = 0, learners: NuisanceLearners = NuisanceLearners(),
              modifiers=MODIFIERS, curve_variable: str = CURVE_VARIABLE, controls=CONTROLS) -> TreatmentEffectEstimate:
    """X-learner: per-arm outcome models, imputed effects, propensity-weighted tau models."""
    Y = frame["Y"].to_numpy(dtype=float)
    T = frame["T"].to_numpy(dtype=float)
    treated, control = T == 1, T == 0
    if not treated.any() or not control.any():
        raise InsufficientDataError("x-learner needs both treated and control rows")
    Xm = _modifier_matrix(frame, modifiers)
    feats = np.column_stack([Xm, frame[list(controls)].to_numpy(dtype=float)])
    F, f_mu, f_sd = _standardize(feats)
    mu0 = learners.outcome().fit(F[control], Y[control])
    mu1 = learners.outcome().fit(F[treated], Y[treated])
    d1 = Y[treated] - mu0.predict(F[treated])
    d0 = mu1.predict(F[control]) - Y[control]
    Z, z_mu, z_sd = _standardize(Xm)
    Za = np.column_stack([np.ones(len(Z)), Z])
    fit1 = stats.ols(d1, Za[treated])
    fit0 = stats.ols(d0, Za[control])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        prop = learners.propensity().fit(F, T)
    g = prop.predict_proba(F)
    lo, hi = PROPENSITY_CLIP
    if (g < lo).any() or (g > hi).any():
        warnings.warn(f"propensity scores clipped to [{lo}, {hi}]", RuntimeWarning, stacklevel=2)
    g = np.clip(g, lo, hi)
    sample = g * (Za @ fit0.coefficients) + (1 - g) * (Za @ fit1.coefficients)
    j = list(modifiers).index(curve_variable)
    n_mod = len(modifiers)

    def parts(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = np.zeros((len(x), n_mod))
        z[:, j] = (x - z_mu[j]) / z_sd[j]
        D = np.column_stack([np.ones(len(x)), z])
        f = np.zeros((len(x), F.shape[1]))
        f[:, j] = (x - f_mu[j]) / f_sd[j]
        gx = np.clip(prop.predict_proba(f), lo, hi)
        return D, gx

    def effect_fn(x):
        D, gx = parts(x)
        return gx * (D @ fit0.coefficients) + (1 - gx) * (D @ fit1.coefficients)

    grid = _curve_grid(Xm[:, j])
    D, gx = parts(grid)
    tau = effect_fn(grid)
    var = (gx ** 2 * np.einsum("ij,jk,ik->i", D, fit0.covariance, D)
           + (1 - gx) ** 2 * np.einsum("ij,jk,ik->i", D, fit1.covariance, D))
    # imputed effects inherit the error of the opposite arm's outcome model; its
    # contribution to a mean is approximated by the classical OLS covariance
    Fa = np.column_stack([np.ones(len(F)), F])
    v_mu0 = _mean_prediction_var(Fa[control], Y[control], Fa[treated].mean(axis=0))
    v_mu1 = _mean_prediction_var(Fa[treated], Y[treated], Fa[control].mean(axis=0))
    gbar = float(g.mean())
    ate = float(sample.mean())
    var_ate = gbar ** 2 * (fit0.covariance[0, 0] + v_mu1) + (1 - gbar) ** 2 * (fit1.covariance[0, 0] + v_mu0)
    se = float(np.sqrt(var_ate))
    half = Z95 * np.sqrt(var + gx ** 2 * v_mu1 + (1 - gx) ** 2 * v_mu0)
    curve = pd.DataFrame({"x": grid, "tau": tau, "ci_low": tau - half, "ci_high": tau + half})
    return TreatmentEffectEstimate("X-Learner", ate, se, curve, effect_fn, sample,
                                   (float(Xm[:, j].min()), float(Xm[:, j].max())), {"propensity": g})


def _mean_prediction_var(Xa, y, point) -> float:
    try:
        cov = stats.ols(y, Xa).covariance
    except FGEError:
        return 0.0
    return float(point @ cov @ point)


def estimate_from_function(name: str, x_sample, fn, grid=None) -> TreatmentEffectEstimate:
    """Wrap a known effect function (used for analytic checks and reference curves)."""
    x = np.asarray(x_sample, dtype=float)
    grid = _curve_grid(x) if grid is None else np.asarray(grid, dtype=float)
    tau = np.asarray(fn(grid), dtype=float)
    curve = pd.DataFrame({"x": grid, "tau": tau, "ci_low": tau, "ci_high": tau})
    sample = np.asarray(fn(x), dtype=float)
    return TreatmentEffectEstimate(name, float(sample.mean()), 0.0, curve, fn, sample,
                                   (float(x.min()), float(x.max())))


def tail_multiplier(estimate: TreatmentEffectEstimate, threshold_x: float = TAIL_THRESHOLD) -> float:
    """tau-hat at the threshold divided by the mean tau-hat over the sample."""
    lo, hi = estimate.x_range
    if not lo <= threshold_x <= hi:
        raise FGEError(f"threshold {threshold_x} lies outside the modifier range [{lo}, {hi}]")
    mean = float(np.mean(estimate.sample_effects))
    if abs(mean) < 1e-12:
        raise FGEError("mean effect is zero; tail multiplier undefined")
    return float(estimate.effect_fn(np.array([threshold_x]))[0] / mean)


def consensus(estimates, baseline: str = "Linear DML") -> pd.DataFrame:
    """Spearman correlation of each CATE curve with the baseline curve (NaN if undefined)."""
    curves = {e.estimator: e.curve for e in estimates}
    if len(curves) < 2:
        raise FGEError("consensus needs at least two estimators")
    if baseline not in curves:
        raise FGEError(f"baseline {baseline!r} not among the estimates")
    base = curves[baseline]
    rows = []
    for name, c in curves.items():
        if len(c) != len(base) or not np.allclose(c["x"].to_numpy(), base["x"].to_numpy(), rtol=1e-9, atol=0):
            raise FGEError(f"curve of {name!r} is not on the baseline grid")
        try:
            rho = stats.spearman(base["tau"].to_numpy(), c["tau"].to_numpy())
        except FGEError:
            rho = float("nan")
        rows.append((baseline, name, rho))
    return pd.DataFrame(rows, columns=["baseline", "estimator", "rho"])


def on_grid(estimate: TreatmentEffectEstimate, grid) -> TreatmentEffectEstimate:
    """Re-evaluate an estimate's curve on another grid (point values only)."""
    grid = np.asarray(grid, dtype=float)
    tau = estimate.effect_fn(grid)
    old = estimate.curve
    half_lo = np.interp(grid, old["x"], old["tau"] - old["ci_low"])
    half_hi = np.interp(grid, old["x"], old["ci_high"] - old["tau"])
    curve = pd.DataFrame({"x": grid, "tau": tau, "ci_low": tau - half_lo, "ci_high": tau + half_hi})
    return TreatmentEffectEstimate(estimate.estimator, estimate.ate, estimate.se, curve, estimate.effect_fn,
                                   estimate.sample_effects, estimate.x_range, estimate.details)


def causal_report(estimates, threshold_x: float = TAIL_THRESHOLD) -> pd.DataFrame:
    rows = []
    for e in estimates:
        lo, hi = e.ci
        try:
            tm = tail_multiplier(e, threshold_x)
        except FGEError:
            tm = float("nan")
        rows.append((e.estimator, e.ate, e.se, lo, hi, tm))
    return pd.DataFrame(rows, columns=CAUSAL_COLUMNS)


def curve_table(estimates) -> pd.DataFrame:
    return pd.concat([e.curve.assign(estimator=e.estimator)[CURVE_COLUMNS] for e in estimates], ignore_index=True)
