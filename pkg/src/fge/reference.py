"""Published reference values, stored verbatim for side-by-side reporting.

Each entry carries the value as printed (``display``), a numeric value where
one exists, and its unit. These numbers come from a proprietary data set and
are not expected to be reproduced by synthetic runs; they serve as labelled
fixtures and as calibration targets for the generator.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RefValue:
    key: str
    table: str
    quantity: str
    display: str
    unit: str
    value: float | None = None


def _r(key, table, quantity, display, unit, value=None):
    if value is None:
        try:
            value = float(display.replace("%", "").replace("x", ""))
        except ValueError:
            value = None
    return RefValue(key, table, quantity, display, unit, value)


REFERENCE: tuple[RefValue, ...] = (
    # realized CMER over the filing gap
    _r("cmer.mean", "Table 3", "Mean CMER", "0.016484", "fraction"),
    _r("cmer.se", "Table 3", "Mean CMER standard error", "0.000030", "fraction"),
    _r("cmer.t", "Table 3", "Mean CMER t-statistic", "553.930", "t"),
    _r("cmer.n", "Table 3", "Observations", "2614577", "count"),
    # information premium
    _r("car.car144", "Table 4", "CAR144 [0,+2] mean", "0.001589", "fraction"),
    _r("car.car4", "Table 4", "CAR4 [0,+2] mean", "0.014532", "fraction"),
    _r("car.diff", "Table 4", "Mean difference CAR144 - CAR4", "-0.012943", "fraction"),
    _r("car.t", "Table 4", "Mean difference t-statistic", "-3.094", "t"),
    _r("car.p", "Table 4", "Mean difference p-value", "0.00216", "p"),
    # descriptive statistics of the event-study outputs
    _r("desc.car144.mean", "Table 5", "CAR144 mean", "0.00159", "fraction"),
    _r("desc.car144.std", "Table 5", "CAR144 std. dev.", "0.03173", "fraction"),
    _r("desc.car144.q25", "Table 5", "CAR144 25th percentile", "-0.01661", "fraction"),
    _r("desc.car144.median", "Table 5", "CAR144 median", "0.00030", "fraction"),
    _r("desc.car144.q75", "Table 5", "CAR144 75th percentile", "0.01653", "fraction"),
    _r("desc.car4.mean", "Table 5", "CAR4 mean", "0.01453", "fraction"),
    _r("desc.car4.std", "Table 5", "CAR4 std. dev.", "0.06529", "fraction"),
    _r("desc.car4.q25", "Table 5", "CAR4 25th percentile", "-0.01911", "fraction"),
    _r("desc.car4.median", "Table 5", "CAR4 median", "-0.00012", "fraction"),
    _r("desc.car4.q75", "Table 5", "CAR4 75th percentile", "0.01933", "fraction"),
    _r("desc.alpha.mean", "Table 5", "Alpha mean", "0.00070", "fraction/day"),
    _r("desc.alpha.std", "Table 5", "Alpha std. dev.", "0.00207", "fraction/day"),
    _r("desc.alpha.q25", "Table 5", "Alpha 25th percentile", "-0.00060", "fraction/day"),
    _r("desc.alpha.median", "Table 5", "Alpha median", "0.00052", "fraction/day"),
    _r("desc.alpha.q75", "Table 5", "Alpha 75th percentile", "0.00242", "fraction/day"),
    _r("desc.beta.mean", "Table 5", "Market beta mean", "1.00656", "beta"),
    _r("desc.beta.std", "Table 5", "Market beta std. dev.", "0.49883", "beta"),
    _r("desc.beta.q25", "Table 5", "Market beta 25th percentile", "0.68187", "beta"),
    _r("desc.beta.median", "Table 5", "Market beta median", "0.95739", "beta"),
    _r("desc.beta.q75", "Table 5", "Market beta 75th percentile", "1.22207", "beta"),
    # decodability audit
    _r("audit.ElasticNetLogistic.pr_auc", "Table 5 audit", "Elastic Net PR-AUC", "0.2511", "area"),
    _r("audit.ElasticNetLogistic.recall_abort", "Table 5 audit", "Elastic Net recall (abort)", "0.76%", "percent"),
    _r("audit.ElasticNetLogistic.precision_abort", "Table 5 audit", "Elastic Net precision (abort)", "0.21",
       "fraction"),
    _r("audit.BalancedForest.pr_auc", "Table 5 audit", "Balanced RF PR-AUC", "0.4219", "area"),
    _r("audit.BalancedForest.recall_abort", "Table 5 audit", "Balanced RF recall (abort)", "67.56%", "percent"),
    _r("audit.BalancedForest.precision_abort", "Table 5 audit", "Balanced RF precision (abort)", "0.35", "fraction"),
    _r("audit.WeightedBoostedTrees.pr_auc", "Table 5 audit", "XGBoost PR-AUC", "0.3972", "area"),
    _r("audit.WeightedBoostedTrees.recall_abort", "Table 5 audit", "XGBoost recall (abort)", "53.00%", "percent"),
    _r("audit.WeightedBoostedTrees.precision_abort", "Table 5 audit", "XGBoost precision (abort)", "0.36",
       "fraction"),
    _r("audit.svm.pr_auc", "Table 5 audit", "Weighted SVM PR-AUC (reference only)", "0.2509", "area"),
    _r("audit.iforest.pr_auc", "Table 5 audit", "Isolation Forest PR-AUC (reference only)", "0.2317", "area"),
    _r("audit.node.pr_auc", "Table 5 audit", "NODE PR-AUC (reference only)", "0.3710", "area"),
    _r("audit.tabnet.pr_auc", "Table 5 audit", "TabNet PR-AUC (reference only)", "0.3610", "area"),
    _r("audit.ftt.pr_auc", "Table 5 audit", "FT-Transformer PR-AUC (reference only)", "0.3698", "area"),
    _r("audit.dndf.pr_auc", "Table 5 audit", "DNDF-Proxy PR-AUC (reference only)", "0.2995", "area"),
    _r("audit.tft.pr_auc", "Table 5 audit", "TFT-Proxy PR-AUC (reference only)", "0.3000", "area"),
    # confusion matrix of the boosted model
    _r("cm.tn", "Table 6", "Executed predicted executed", "69.31%", "percent of row"),
    _r("cm.fp", "Table 6", "Executed predicted aborted", "30.69%", "percent of row"),
    _r("cm.fn", "Table 6", "Aborted predicted executed", "46.77%", "percent of row"),
    _r("cm.tp", "Table 6", "Aborted predicted aborted", "53.23%", "percent of row"),
    _r("cm.precision0", "Table 6", "Precision (executed)", "0.82", "fraction"),
    _r("cm.recall0", "Table 6", "Recall (executed)", "0.69", "fraction"),
    _r("cm.f1_0", "Table 6", "F1 (executed)", "0.75", "fraction"),
    _r("cm.precision1", "Table 6", "Precision (aborted)", "0.36", "fraction"),
    _r("cm.recall1", "Table 6", "Recall (aborted)", "0.53", "fraction"),
    _r("cm.f1_1", "Table 6", "F1 (aborted)", "0.43", "fraction"),
    _r("cm.accuracy", "Table 6", "Accuracy", "0.65", "fraction"),
    _r("cm.roc_auc", "Table 6", "AUC-ROC", "0.66", "area"),
    # SMOTE and cost-weight sweep
    _r("sweep.tpr", "Figure 3", "Signal detection (TPR) bound", "0.476", "fraction"),
    _r("sweep.fn", "Figure 3", "Strategic opacity (FN rate)", "52.4%", "percent"),
    # calendar-time portfolios
    _r("ctp.EW.alpha", "Table 7A", "Equal-weighted alpha", "32.21", "bps/month"),
    _r("ctp.EW.se", "Table 7A", "Equal-weighted std. error", "0.003", "fraction/month"),
    _r("ctp.EW.t", "Table 7A", "Equal-weighted t-statistic", "1.03", "t"),
    _r("ctp.EW.p", "Table 7A", "Equal-weighted p-value", "0.304", "p"),
    _r("ctp.VW.alpha", "Table 7A", "Value-weighted alpha", "0.46", "bps/month"),
    _r("ctp.VW.se", "Table 7A", "Value-weighted std. error", "0.002", "fraction/month"),
    _r("ctp.VW.t", "Table 7A", "Value-weighted t-statistic", "0.03", "t"),
    _r("ctp.VW.p", "Table 7A", "Value-weighted p-value", "0.979", "p"),
    # cross-sectional determinants
    _r("det.intercept.coef", "Table 7B", "Intercept coefficient", "0.0046", "fraction/month"),
    _r("det.intercept.se", "Table 7B", "Intercept std. error", "0.003", "fraction/month"),
    _r("det.intercept.t", "Table 7B", "Intercept t-statistic (printed as z)", "1.574", "t"),
    _r("det.intercept.p", "Table 7B", "Intercept p-value", "0.116", "p"),
    _r("det.signal_magnitude.coef", "Table 7B", "Signal magnitude coefficient", "-0.0014", "fraction/month per sd"),
    _r("det.signal_magnitude.se", "Table 7B", "Signal magnitude std. error", "0.001", "fraction/month per sd"),
    _r("det.signal_magnitude.t", "Table 7B", "Signal magnitude t-statistic (printed as z)", "-1.208", "t"),
    _r("det.signal_magnitude.p", "Table 7B", "Signal magnitude p-value", "0.227", "p"),
    _r("det.illiquidity.coef", "Table 7B", "Illiquidity coefficient", "-0.0000", "fraction/month per sd"),
    _r("det.illiquidity.se", "Table 7B", "Illiquidity std. error", "0.000", "fraction/month per sd"),
    _r("det.illiquidity.t", "Table 7B", "Illiquidity t-statistic (printed as z)", "-0.012", "t"),
    _r("det.illiquidity.p", "Table 7B", "Illiquidity p-value", "0.990", "p"),
    _r("det.prior_volatility.coef", "Table 7B", "Prior volatility coefficient", "-0.0034", "fraction/month per sd"),
    _r("det.prior_volatility.se", "Table 7B", "Prior volatility std. error", "0.001", "fraction/month per sd"),
    _r("det.prior_volatility.t", "Table 7B", "Prior volatility t-statistic (printed as z)", "-2.312", "t"),
    _r("det.prior_volatility.p", "Table 7B", "Prior volatility p-value", "0.021", "p"),
    _r("det.filing_gap_days.coef", "Table 7B", "Filing gap days coefficient", "0.0003", "fraction/month per sd"),
    _r("det.filing_gap_days.se", "Table 7B", "Filing gap days std. error", "0.002", "fraction/month per sd"),
    _r("det.filing_gap_days.t", "Table 7B", "Filing gap days t-statistic (printed as z)", "0.145", "t"),
    _r("det.filing_gap_days.p", "Table 7B", "Filing gap days p-value", "0.885", "p"),
    # size split
    _r("size.small.alpha", "Table 8", "Small-cap alpha", "30.96", "bps/month"),
    _r("size.small.t", "Table 8", "Small-cap t-statistic", "0.56", "t"),
    _r("size.small.p", "Table 8", "Small-cap p-value", "0.574", "p"),
    _r("size.large.alpha", "Table 8", "Large-cap alpha", "14.49", "bps/month"),
    _r("size.large.t", "Table 8", "Large-cap t-statistic", "2.30", "t"),
    _r("size.large.p", "Table 8", "Large-cap p-value", "0.021", "p"),
    # heterogeneous treatment effects
    _r("hte.Linear DML.ate", "Table 9", "Linear DML mean effect", "0.0415", "Amihud x1e6"),
    _r("hte.Linear DML.tail", "Table 9", "Linear DML tail multiplier", "2.01x", "ratio"),
    _r("hte.Linear DML.rho", "Table 9", "Linear DML consensus", "1.00", "rho"),
    _r("hte.Orthogonal Forest.ate", "Table 9", "Orthogonal Forest mean effect (reference only)", "0.0176", "Amihud x1e6"),
    _r("hte.Orthogonal Forest.tail", "Table 9", "Orthogonal Forest tail multiplier (reference only)", "2.63x",
       "ratio"),
    _r("hte.Orthogonal Forest.rho", "Table 9", "Orthogonal Forest consensus (reference only)", "0.66", "rho"),
    _r("hte.X-Learner.ate", "Table 9", "X-Learner mean effect", "0.0007", "Amihud x1e6"),
    _r("hte.X-Learner.tail", "Table 9", "X-Learner tail multiplier", "1.06x", "ratio"),
    _r("hte.X-Learner.rho", "Table 9", "X-Learner consensus", "1.00", "rho"),
    _r("hte.Honest Anchor.ate", "Table 9", "Honest Anchor mean effect (reference only)", "~0.00", "Amihud x1e6", 0.0),
    _r("hte.Honest Anchor.tail", "Table 9", "Honest Anchor tail multiplier (reference only)", "1.03x", "ratio"),
    _r("hte.Honest Anchor.rho", "Table 9", "Honest Anchor consensus (reference only)", "0.24", "rho"),
    _r("hte.XGBoost DML.ate", "Table 9", "XGBoost DML mean effect (reference only)", "-0.0026", "Amihud x1e6"),
    _r("hte.XGBoost DML.tail", "Table 9", "XGBoost DML tail multiplier (reference only)", "2.67x", "ratio"),
    _r("hte.XGBoost DML.rho", "Table 9", "XGBoost DML consensus (reference only)", "-1.00", "rho"),
    # generator calibration targets
    _r("sm.decile1", "Figure 1", "Lowest CMER decile mean signal magnitude", "1.63%", "percent"),
    _r("sm.decile10", "Figure 1", "Highest CMER decile mean signal magnitude", "51.13%", "percent"),
    _r("labels.prevalence", "Sample", "Positive-class prevalence in the audit sample", "3.08%", "percent"),
    _r("labels.opacity", "Sample", "Non-execution frequency (share of intents)", "52.4%", "percent"),
)

BY_KEY = {r.key: r for r in REFERENCE}


def get(key: str) -> RefValue:
    return BY_KEY[key]
