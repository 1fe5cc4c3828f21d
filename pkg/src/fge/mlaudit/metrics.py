"""Threshold metrics, ROC-AUC and precision-recall AUC.

PR-AUC is the trapezoid rule over the achieved (recall, precision) points,
one point per distinct score threshold, scanned from the highest score down.
No precision value is invented at recall 0: the segment from recall 0 to the
first achieved point is flat at that point's precision. Terms are summed with
``math.fsum`` so that any implementation that visits the same thresholds
produces the identical float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import FGEError
from ..stats import rank_average


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y).astype(np.int64)
    if y.size == 0:
        raise FGEError("empty evaluation set")
    if y.min() == y.max():
        raise FGEError("evaluation set holds a single class; AUCs are undefined")
    return y


def roc_auc(y, scores) -> float:
    """Mann-Whitney statistic with mid-ranked ties."""
    y = _check_labels(y)
    ranks = rank_average(np.asarray(scores, dtype=float))
    n1 = int(y.sum())
    n0 = len(y) - n1
    return float((ranks[y == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def pr_points(y, scores) -> tuple[list[float], list[float]]:
    """(recall, precision) at every distinct threshold, from the highest score down."""
    y = _check_labels(y)
    s = np.asarray(scores, dtype=float)
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    tp = np.cumsum(y[order])
    last = np.r_[np.nonzero(np.diff(s_sorted))[0], len(s) - 1]
    n_pos = int(y.sum())
    tps = tp[last].tolist()
    preds = (last + 1).tolist()
    recall = [t / n_pos for t in tps]
    precision = [t / k for t, k in zip(tps, preds)]
    return recall, precision


def trapezoid(recall, precision) -> float:
    r = [0.0] + list(recall)
    p = [precision[0]] + list(precision)
    return math.fsum((r[i] - r[i - 1]) * (p[i] + p[i - 1]) / 2.0 for i in range(1, len(r)))


def pr_auc(y, scores) -> float:
    r, p = pr_points(y, scores)
    return trapezoid(r, p)


@dataclass(frozen=True)
class EvalReport:
    confusion: np.ndarray  # row-normalized, rows = true class (0 executed, 1 aborted)
    counts: np.ndarray
    precision: tuple[float, float]
    recall: tuple[float, float]
    f1: tuple[float, float]
    accuracy: float
    roc_auc: float
    pr_auc: float
    threshold: float

    @property
    def type_ii_rate(self) -> float:
        """Share of true aborts classified as executions (the opacity rate)."""
        return float(self.confusion[1, 0])

    @property
    def tpr(self) -> float:
        return self.recall[1]

    def as_row(self) -> dict[str, float]:
        return {"pr_auc": self.pr_auc, "roc_auc": self.roc_auc, "recall_abort": self.recall[1],
                "precision_abort": self.precision[1], "fn_rate": self.type_ii_rate, "accuracy": self.accuracy}


def _ratio(a: float, b: float) -> float:
    return a / b if b > 0 else 0.0


def evaluate_scores(y, scores, threshold: float = 0.5) -> EvalReport:
    y = _check_labels(y)
    s = np.asarray(scores, dtype=float)
    pred = (s >= threshold).astype(np.int64)
    counts = np.zeros((2, 2), dtype=np.int64)
    np.add.at(counts, (y, pred), 1)
    conf = counts / counts.sum(axis=1, keepdims=True)
    prec = tuple(_ratio(counts[c, c], counts[:, c].sum()) for c in (0, 1))
    rec = tuple(_ratio(counts[c, c], counts[c, :].sum()) for c in (0, 1))
    f1 = tuple(_ratio(2 * p * r, p + r) for p, r in zip(prec, rec))
    return EvalReport(conf, counts, prec, rec, f1, float(np.trace(counts) / counts.sum()),
                      roc_auc(y, s), pr_auc(y, s), threshold)


def evaluate(model, X, y, threshold: float = 0.5) -> EvalReport:
    return evaluate_scores(y, model.predict_proba(X), threshold)
