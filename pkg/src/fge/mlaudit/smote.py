"""Synthetic minority oversampling by interpolation between minority neighbours."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import FGEError


@dataclass(frozen=True)
class SmoteResult:
    X: np.ndarray
    y: np.ndarray
    base: np.ndarray       # row index (into the input) of each synthetic point's origin
    neighbor: np.ndarray   # row index of the neighbour it was drawn toward
    u: np.ndarray          # interpolation weight in [0, 1)
    k: int

    @property
    def n_synthetic(self) -> int:
        return len(self.base)


def nearest_neighbors(X, k: int, chunk: int = 2048) -> np.ndarray:
    """Indices of the k nearest other rows (Euclidean), ties broken by lower index."""
    X = np.asarray(X, dtype=float)
    n = len(X)
    sq = (X ** 2).sum(axis=1)
    out = np.empty((n, k), dtype=np.int64)
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        d2 = sq[s:e, None] + sq[None, :] - 2.0 * X[s:e] @ X.T
        d2[np.arange(e - s), np.arange(s, e)] = np.inf
        # stable sort keeps the lower index first among equal distances
        out[s:e] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def target_minority_count(alpha: float, n_majority: int) -> int:
    """Minority size after augmentation: round(alpha * n_majority), halves rounded up."""
    return int(math.floor(alpha * n_majority + 0.5))


def smote(X, y, alpha: float = 1.0, k: int = 5, seed: int = 0) -> SmoteResult:
    """Append synthetic minority rows until minority/majority = alpha.

    The minority class is label 1. When alpha asks for fewer minority rows than
    already exist nothing is added (SMOTE never removes data).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int64)
    if alpha <= 0:
        raise FGEError("alpha must be positive")
    minority = np.nonzero(y == 1)[0]
    n_min, n_maj = len(minority), int((y == 0).sum())
    if n_min <= 1:
        raise FGEError(f"SMOTE needs at least 2 minority rows, got {n_min}")
    if n_min <= k:
        warnings.warn(f"minority count {n_min} <= k={k}; using k={n_min - 1}", RuntimeWarning, stacklevel=2)
        k = n_min - 1
    n_new = max(0, target_minority_count(alpha, n_maj) - n_min)
    empty = np.zeros(0, dtype=np.int64)
    if n_new == 0:
        return SmoteResult(X.copy(), y.copy(), empty, empty, np.zeros(0), k)
    rng = np.random.Generator(np.random.PCG64(seed))
    nn = nearest_neighbors(X[minority], k)
    b = rng.integers(0, n_min, n_new)
    j = rng.integers(0, k, n_new)
    u = rng.uniform(0.0, 1.0, n_new)
    a_rows, n_rows = minority[b], minority[nn[b, j]]
    synth = X[a_rows] + u[:, None] * (X[n_rows] - X[a_rows])
    return SmoteResult(np.vstack([X, synth]), np.r_[y, np.ones(n_new, dtype=np.int64)], a_rows, n_rows, u, k)
