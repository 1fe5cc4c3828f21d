"""Histogram CART shared by the balanced forest and weighted boosted trees.

Features are cut at training quantiles (or at midpoints between unique values
when there are few), and trees grow level by level from per-node histograms.
When raw feature values are supplied, the winning histogram edge is refined
to the best exact cut among the distinct values of the two bins around it, so
a boundary that falls inside a bin is still found. A split sends
``x <= threshold`` left. Ties in split gain go to the lowest feature index,
then the lowest threshold.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import FGEError
from .linear import sigmoid

DEFAULT_MAX_BINS = 64


@dataclass(frozen=True)
class Binner:
    edges: tuple[np.ndarray, ...]

    @classmethod
    def fit(cls, X, max_bins: int = DEFAULT_MAX_BINS) -> "Binner":
        X = np.asarray(X, dtype=float)
        edges = []
        for j in range(X.shape[1]):
            u = np.unique(X[:, j])
            if len(u) <= max_bins:
                e = (u[:-1] + u[1:]) / 2.0
            else:
                e = np.unique(np.quantile(X[:, j], np.arange(1, max_bins) / max_bins))
            edges.append(e)
        return cls(tuple(edges))

    @property
    def n_bins(self) -> int:
        return max(len(e) for e in self.edges) + 1

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.column_stack([np.searchsorted(e, X[:, j], side="left") for j, e in enumerate(self.edges)])


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            rows = np.nonzero(inner)[0]
            go_left = X[rows, f[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=int)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())


def gini_gain(left, right, total):
    def weighted_impurity(s):
        w = s[..., 0] + s[..., 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(w > 0, w - (s[..., 0] ** 2 + s[..., 1] ** 2) / w, 0.0)
    return weighted_impurity(total) - weighted_impurity(left) - weighted_impurity(right)


def gini_leaf(s) -> float:
    w = s[0] + s[1]
    return float(s[0] / w) if w > 0 else 0.0


def newton_gain(reg_lambda):
    def gain(left, right, total):
        def score(s):
            return s[..., 0] ** 2 / (s[..., 1] + reg_lambda)
        return 0.5 * (score(left) + score(right) - score(total))
    return gain


def newton_leaf(reg_lambda):
    return lambda s: float(-s[0] / (s[1] + reg_lambda))


def _refine(x, st, base_left, total, gain_fn, min_leaf):
    """Best exact cut over sorted raw values ``x``; returns (threshold, gain) or None."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cut = np.nonzero(xs[1:] > xs[:-1])[0]
    if cut.size == 0:
        return None
    lefts = base_left + np.cumsum(st[order], axis=0)[cut]
    rights = total - lefts
    gain = gain_fn(lefts, rights, total)
    gain = np.where((lefts[:, -1] >= min_leaf) & (rights[:, -1] >= min_leaf), gain, -np.inf)
    i = int(np.argmax(gain))
    if not np.isfinite(gain[i]):
        return None
    return float((xs[cut[i]] + xs[cut[i] + 1]) / 2.0), float(gain[i])


def build_tree(B, stats, binner: Binner, gain_fn, leaf_fn, max_depth: int, min_leaf: int = 1,
               min_gain: float = 1e-12, X=None) -> Tree:
    """Grow one tree on binned features ``B`` and per-row statistics ``stats``.

    The last statistic column must be the row count (used for ``min_leaf``).
    With raw features ``X`` each chosen cut is refined exactly (see module docs).
    """
    n, d = B.shape
    k = stats.shape[1]
    nb = binner.n_bins
    has_edge = np.zeros((d, nb), dtype=bool)
    for j, e in enumerate(binner.edges):
        has_edge[j, : len(e)] = True
    feature, threshold, left, right, value = [-1], [np.nan], [-1], [-1], [0.0]
    node_of = np.zeros(n, dtype=np.int64)
    active = [0]
    for depth in range(max_depth + 1):
        if not active:
            break
        m = len(active)
        pos = np.full(len(feature), -1, dtype=np.int64)
        pos[active] = np.arange(m)
        lp = pos[node_of]
        sel = np.nonzero(lp >= 0)[0]
        if len(sel) == n:
            lps, Bs, st = lp * nb, B, stats
        else:
            lps, Bs, st = lp[sel] * nb, B[sel], stats[sel]
        hist = np.empty((m, d, nb, k))
        for j in range(d):
            idx = lps + Bs[:, j]
            for c in range(k):
                hist[:, j, :, c] = np.bincount(idx, weights=st[:, c], minlength=m * nb).reshape(m, nb)
        total = hist[:, 0, :, :].sum(axis=1)
        if depth == max_depth:
            for a, node in enumerate(active):
                value[node] = leaf_fn(total[a])
            break
        lefts = np.cumsum(hist, axis=2)
        rights = total[:, None, None, :] - lefts
        gain = gain_fn(lefts, rights, total[:, None, None, :])
        ok = has_edge[None] & (lefts[..., -1] >= min_leaf) & (rights[..., -1] >= min_leaf)
        gain = np.where(ok, gain, -np.inf)
        flat = gain.reshape(m, d * nb)
        best = np.argmax(flat, axis=1)
        best_gain = flat[np.arange(m), best]
        next_active = []
        split_f = np.full(len(feature), -1, dtype=np.int64)
        split_b = np.zeros(len(feature), dtype=np.int64)
        if X is not None:
            lsel = lp[sel] if len(sel) < n else lp
            order = np.argsort(lsel, kind="stable")
            bounds = np.searchsorted(lsel[order], np.arange(m + 1))
        for a, node in enumerate(active):
            scale = max(abs(total[a, 0]) + abs(total[a, 1]), 1.0)
            if not best_gain[a] > min_gain * scale:
                value[node] = leaf_fn(total[a])
                continue
            f, b = divmod(int(best[a]), nb)
            feature[node], threshold[node] = f, float(binner.edges[f][b])
            if X is not None:
                rows = sel[order[bounds[a]:bounds[a + 1]]]
                near = rows[(B[rows, f] == b) | (B[rows, f] == b + 1)]
                base = lefts[a, f, b - 1] if b > 0 else np.zeros(k)
                found = _refine(X[near, f], stats[near], base, total[a], gain_fn, min_leaf)
                if found is not None and found[1] >= best_gain[a]:
                    threshold[node] = found[0]
            for side in (left, right):
                side[node] = len(feature)
                feature.append(-1)
                threshold.append(np.nan)
                left.append(-1)
                right.append(-1)
                value.append(0.0)
            next_active += [left[node], right[node]]
            split_f[node], split_b[node] = f, b
        split_f = np.r_[split_f, np.full(len(feature) - len(split_f), -1)]
        split_b = np.r_[split_b, np.zeros(len(feature) - len(split_b), dtype=np.int64)]
        moving = sel[split_f[node_of[sel]] >= 0]
        if moving.size:
            nd = node_of[moving]
            if X is None:
                go_left = B[moving, split_f[nd]] <= split_b[nd]
            else:
                go_left = X[moving, split_f[nd]] <= np.asarray(threshold)[nd]
            node_of[moving] = np.where(go_left, np.asarray(left)[nd], np.asarray(right)[nd])
        active = next_active
    return Tree(np.asarray(feature), np.asarray(threshold), np.asarray(left), np.asarray(right),
                np.asarray(value, dtype=float))


def _check_two_classes(y) -> np.ndarray:
    y = np.asarray(y).astype(np.int64)
    if y.size == 0 or y.min() == y.max():
        raise FGEError("training set must contain both classes")
    return y


@dataclass
class BalancedForest:
    """Bagged Gini trees, each on a minority bootstrap plus an equal-size majority undersample."""

    n_trees: int = 100
    max_depth: int = 6
    min_leaf: int = 1
    max_bins: int = DEFAULT_MAX_BINS
    seed: int = 0
    n_jobs: int = 1
    paradigm: str = "BalancedForest"
    trees: list[Tree] = field(default_factory=list)

    def fit(self, X, y) -> "BalancedForest":
        X = np.asarray(X, dtype=float)
        y = _check_two_classes(y)
        if self.n_trees < 1:
            raise FGEError("n_trees must be at least 1")
        binner = Binner.fit(X, self.max_bins)
        B = binner.transform(X)
        pos, neg = np.nonzero(y == 1)[0], np.nonzero(y == 0)[0]
        minority, majority = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
        streams = np.random.SeedSequence(self.seed).spawn(self.n_trees)

        def grow(ss):
            rng = np.random.Generator(np.random.PCG64(ss))
            a = rng.choice(minority, len(minority), replace=True)
            b = rng.choice(majority, len(minority), replace=len(majority) < len(minority))
            rows = np.sort(np.r_[a, b])
            yy = y[rows].astype(float)
            st = np.column_stack([yy, 1.0 - yy, np.ones(len(rows))])
            return build_tree(B[rows], st, binner, gini_gain, gini_leaf, self.max_depth, self.min_leaf, X=X[rows])

        if self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                self.trees = list(pool.map(grow, streams))
        else:
            self.trees = [grow(ss) for ss in streams]
        return self

    def predict_proba(self, X) -> np.ndarray:
        votes = np.zeros(len(X))
        for t in self.trees:
            votes += t.predict(X) > 0.5
        return votes / len(self.trees)


def weighted_log_loss(y, p, w) -> float:
    p = np.clip(p, 1e-15, 1 - 1e-15)
    return float(np.sum(-w * (y * np.log(p) + (1 - y) * np.log1p(-p))) / np.sum(w))


@dataclass
class WeightedBoostedTrees:
    """Newton boosting of depth-limited regression trees on class-weighted logistic loss."""

    n_rounds: int = 50
    max_depth: int = 3
    learning_rate: float = 0.1
    positive_weight: float = 32.5
    reg_lambda: float = 1.0
    min_leaf: int = 1
    max_bins: int = DEFAULT_MAX_BINS
    seed: int = 0
    paradigm: str = "WeightedBoostedTrees"
    base_score: float = 0.0
    trees: list[Tree] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)

    def fit(self, X, y) -> "WeightedBoostedTrees":
        if self.learning_rate <= 0:
            raise FGEError("learning_rate must be positive")
        if self.n_rounds < 1:
            raise FGEError("n_rounds must be at least 1")
        X = np.asarray(X, dtype=float)
        y = _check_two_classes(y).astype(float)
        w = np.where(y == 1, self.positive_weight, 1.0)
        binner = Binner.fit(X, self.max_bins)
        B = binner.transform(X)
        self.base_score = float(np.log((w * y).sum() / (w * (1 - y)).sum()))
        F = np.full(len(y), self.base_score)
        self.trees, self.train_loss = [], [weighted_log_loss(y, sigmoid(F), w)]
        gain, leaf = newton_gain(self.reg_lambda), newton_leaf(self.reg_lambda)
        ones = np.ones(len(y))
        for _ in range(self.n_rounds):
            p = sigmoid(F)
            st = np.column_stack([w * (p - y), w * p * (1 - p), ones])
            tree = build_tree(B, st, binner, gain, leaf, self.max_depth, self.min_leaf, X=X)
            tree.value *= self.learning_rate
            self.trees.append(tree)
            F += tree.predict(X)
            self.train_loss.append(weighted_log_loss(y, sigmoid(F), w))
        return self

    def decision_function(self, X) -> np.ndarray:
        F = np.full(len(X), self.base_score)
        for t in self.trees:
            F += t.predict(X)
        return F

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))
