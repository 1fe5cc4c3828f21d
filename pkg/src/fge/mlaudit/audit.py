"""Train the three classifier paradigms and sweep SMOTE intensity and class weight."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .dataset import Standardizer
from .linear import ElasticNetLogistic
from .metrics import EvalReport, evaluate
from .smote import smote
from .trees import BalancedForest, WeightedBoostedTrees

PARADIGMS = ("ElasticNetLogistic", "BalancedForest", "WeightedBoostedTrees")
DEFAULT_ALPHAS = (0.25, 0.5, 0.75, 1.0)
DEFAULT_WEIGHTS = (1.0, 32.5)
SWEEP_COLUMNS = ["paradigm", "alpha", "weight", "pr_auc", "roc_auc", "tpr", "fn_rate"]
AUDIT_COLUMNS = ["paradigm", "pr_auc", "roc_auc", "recall_abort", "precision_abort", "fn_rate", "accuracy"]


@dataclass(frozen=True)
class ModelSettings:
    l1: float = 1e-3
    l2: float = 1e-3
    n_trees: int = 50
    forest_depth: int = 6
    n_rounds: int = 50
    boost_depth: int = 3
    learning_rate: float = 0.1
    n_jobs: int = 1


def train(paradigm: str, X, y, weight: float = 1.0, seed: int = 0, settings: ModelSettings = ModelSettings()):
    """Fit one paradigm. The forest balances by undersampling and ignores ``weight``."""
    if paradigm == "ElasticNetLogistic":
        return ElasticNetLogistic(settings.l1, settings.l2, positive_weight=weight, seed=seed).fit(X, y)
    if paradigm == "BalancedForest":
        return BalancedForest(settings.n_trees, settings.forest_depth, seed=seed, n_jobs=settings.n_jobs).fit(X, y)
    if paradigm == "WeightedBoostedTrees":
        return WeightedBoostedTrees(settings.n_rounds, settings.boost_depth, settings.learning_rate,
                                    positive_weight=weight, seed=seed).fit(X, y)
    raise ValueError(f"unknown paradigm {paradigm!r}")


def prepare(Xtr, ytr, Xte, alpha: float | None, seed: int):
    """Standardize on train only, then oversample the train side."""
    sc = Standardizer.fit(Xtr)
    Ztr, Zte = sc.transform(Xtr), sc.transform(Xte)
    if alpha:
        res = smote(Ztr, ytr, alpha=alpha, seed=seed)
        Ztr, ytr = res.X, res.y
    return Ztr, ytr, Zte


def run_audit(Xtr, ytr, Xte, yte, alpha: float | None = 1.0, weight: float = 32.5, seed: int = 0,
              paradigms=PARADIGMS, settings: ModelSettings = ModelSettings()) -> dict[str, EvalReport]:
    Ztr, ytr2, Zte = prepare(Xtr, ytr, Xte, alpha, seed)
    return {p: evaluate(train(p, Ztr, ytr2, weight, seed, settings), Zte, yte) for p in paradigms}


def audit_table(reports: dict[str, EvalReport]) -> pd.DataFrame:
    return pd.DataFrame([{"paradigm": p, **r.as_row()} for p, r in reports.items()], columns=AUDIT_COLUMNS)


def opacity_sweep(Xtr, ytr, Xte, yte, alphas=DEFAULT_ALPHAS, weights=DEFAULT_WEIGHTS, seed: int = 0,
                  paradigms=("WeightedBoostedTrees",), settings: ModelSettings = ModelSettings()) -> pd.DataFrame:
    """Retrain and evaluate every paradigm at each (alpha, weight) grid point."""
    if len(alphas) == 0 or len(weights) == 0:
        raise ValueError("sweep grids must be non-empty")
    rows = []
    for a in alphas:
        Ztr, ytr2, Zte = prepare(Xtr, ytr, Xte, a, seed)
        forest_report = None
        for w in weights:
            for p in paradigms:
                if p == "BalancedForest" and forest_report is not None:
                    rep = forest_report  # weight-invariant by construction
                else:
                    rep = evaluate(train(p, Ztr, ytr2, w, seed, settings), Zte, yte)
                    if p == "BalancedForest":
                        forest_report = rep
                rows.append((p, float(a), float(w), rep.pr_auc, rep.roc_auc, rep.tpr, rep.type_ii_rate))
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
