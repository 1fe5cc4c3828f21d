"""Independent reference implementations used as test oracles.

Nothing here imports from the package internals it checks; each function is a
slow, direct transcription of the rule it stands in for.
"""
from __future__ import annotations

import math
from datetime import date, timedelta

import numpy as np
import pandas as pd


# matching

def brute_force_match(intents: pd.DataFrame, executions: pd.DataFrame, window_days: int = 90):
    """Replay every key group by hand.

    For each execution (date order, then exec_id) scan all windows of the same
    (person, firm) key in (file_date, intent_id) order and pour volume into any
    window that is open on that date and not yet full.
    Returns ({intent_id: executed}, {intent_id: first fill date}, [(exec_id, intent_id, shares)]).
    """
    filled = {iid: 0.0 for iid in intents["intent_id"]}
    first: dict[str, pd.Timestamp] = {}
    allocs = []
    windows = sorted(intents.itertuples(index=False), key=lambda r: (r.file_date, r.intent_id))
    for ex in sorted(executions.itertuples(index=False), key=lambda r: (r.transaction_date, r.exec_id)):
        left = ex.shares_sold
        for w in windows:
            if (w.person_id, w.permco) != (ex.person_id, ex.permco):
                continue
            if not (w.file_date <= ex.transaction_date <= w.file_date + pd.Timedelta(days=window_days)):
                continue
            room = w.proposed_shares - filled[w.intent_id]
            if room <= 0 or left <= 0:
                continue
            take = min(room, left)
            filled[w.intent_id] += take
            left -= take
            first.setdefault(w.intent_id, ex.transaction_date)
            allocs.append((ex.exec_id, w.intent_id, take))
    return filled, first, allocs


def random_match_instance(rng: np.random.Generator, n_keys: int = 3, max_records: int = 10):
    """Small random instance with at most ``max_records`` records per key."""
    base = date(2020, 1, 1)
    irows, erows = [], []
    for k in range(n_keys):
        person, permco = f"P{k % 2}", 100 + k
        n_rec = int(rng.integers(1, max_records + 1))
        n_int = int(rng.integers(0, n_rec + 1))
        for j in range(n_int):
            d = base + timedelta(days=int(rng.integers(0, 200)))
            irows.append((f"I{k:02d}{j:02d}", person, permco, pd.Timestamp(d),
                          float(rng.integers(1, 20) * 100), 1e6))
        for j in range(n_rec - n_int):
            d = base + timedelta(days=int(rng.integers(0, 320)))
            erows.append((f"E{k:02d}{j:02d}", person, permco, pd.Timestamp(d),
                          float(rng.integers(1, 30) * 50), 10.0))
    intents = pd.DataFrame(irows, columns=["intent_id", "person_id", "permco", "file_date",
                                           "proposed_shares", "shares_held"])
    executions = pd.DataFrame(erows, columns=["exec_id", "person_id", "permco", "transaction_date",
                                              "shares_sold", "price"])
    intents = intents.astype({"file_date": "datetime64[ns]"})
    executions = executions.astype({"transaction_date": "datetime64[ns]"})
    return intents, executions


# classifier metrics

def pr_auc_all_thresholds(y, scores) -> float:
    """Evaluate precision and recall separately at every distinct threshold."""
    y = np.asarray(y)
    s = np.asarray(scores, dtype=float)
    n_pos = int((y == 1).sum())
    recall, precision = [], []
    for t in sorted(set(s.tolist()), reverse=True):
        pred = s >= t
        tp = int(np.sum(pred & (y == 1)))
        recall.append(tp / n_pos)
        precision.append(tp / int(pred.sum()))
    r = [0.0] + recall
    p = [precision[0]] + precision
    return math.fsum((r[i] - r[i - 1]) * (p[i] + p[i - 1]) / 2.0 for i in range(1, len(r)))


def roc_auc_pairs(y, scores) -> float:
    """Probability that a random positive outranks a random negative (ties count half)."""
    y = np.asarray(y)
    s = np.asarray(scores, dtype=float)
    pos, neg = s[y == 1], s[y == 0]
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


# ranks and regressions

def ranks_by_counting(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    less = (x[None, :] < x[:, None]).sum(axis=1)
    equal = (x[None, :] == x[:, None]).sum(axis=1)
    return less + (equal + 1) / 2.0


def normal_equations(y, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.linalg.solve(X.T @ X, X.T @ np.asarray(y, dtype=float))


def quintile_by_sort(values) -> np.ndarray:
    """Quintile 1..5 from the share of strictly smaller values (ties go low)."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        smaller = sum(1 for w in v if w < v[i])
        q = 1
        while q < 5 and smaller * 5 >= q * n:
            q += 1
        out[i] = q
    return out
