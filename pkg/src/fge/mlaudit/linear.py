"""Elastic-net logistic and linear regression.

Both minimize a mean loss plus ``l1 * |beta|_1 + l2 * |beta|_2^2`` with an
unpenalized intercept. The logistic model uses FISTA (accelerated proximal
gradient); the linear model uses cyclic coordinate descent.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import FGEError


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _check_binary(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise FGEError("labels must be 0/1")
    return y


@dataclass
class ElasticNetLogistic:
    l1: float = 0.0
    l2: float = 0.0
    positive_weight: float = 1.0
    max_iter: int = 5000
    tol: float = 1e-6
    seed: int = 0
    paradigm: str = "ElasticNetLogistic"
    intercept: float = 0.0
    coef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = False
    grad_norm: float = float("nan")
    n_iter: int = 0

    def fit(self, X, y, sample_weight=None) -> "ElasticNetLogistic":
        X = np.asarray(X, dtype=float)
        y = _check_binary(y)
        if self.l1 < 0 or self.l2 < 0:
            raise FGEError("penalties must be non-negative")
        n, d = X.shape
        w = np.where(y == 1, self.positive_weight, 1.0)
        if sample_weight is not None:
            w = w * np.asarray(sample_weight, dtype=float)
        Xa = np.column_stack([np.ones(n), X])
        lip = np.linalg.eigvalsh((Xa * w[:, None]).T @ Xa)[-1] / (4.0 * n) + 2.0 * self.l2
        step = 1.0 / max(lip, 1e-12)
        pen = np.r_[0.0, np.full(d, 1.0)]

        def grad(b):
            r = w * (sigmoid(Xa @ b) - y)
            return Xa.T @ r / n + 2.0 * self.l2 * pen * b

        def prox(b):
            return np.r_[b[0], soft_threshold(b[1:], step * self.l1)]

        b = np.zeros(d + 1)
        z, t = b.copy(), 1.0
        gnorm = np.inf
        for it in range(1, self.max_iter + 1):
            b_new = prox(z - step * grad(z))
            # gradient mapping at the current iterate measures stationarity
            gnorm = float(np.linalg.norm((b_new - z) / step))
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = b_new + ((t - 1.0) / t_new) * (b_new - b)
            b, t = b_new, t_new
            if gnorm < self.tol:
                break
        self.n_iter = it
        self.grad_norm = gnorm
        self.converged = gnorm < self.tol
        if not self.converged:
            warnings.warn(f"elastic-net logistic stopped after {it} iterations, "
                          f"gradient-mapping norm {gnorm:.3g}", RuntimeWarning, stacklevel=2)
        self.intercept, self.coef = float(b[0]), b[1:].copy()
        return self

    def decision_function(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=float) @ self.coef

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))


@dataclass
class ElasticNetLinear:
    l1: float = 0.0
    l2: float = 0.0
    max_iter: int = 1000
    tol: float = 1e-10
    intercept: float = 0.0
    coef: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def fit(self, X, y) -> "ElasticNetLinear":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, d = X.shape
        mu, ybar = X.mean(axis=0), y.mean()
        Xc, yc = X - mu, y - ybar
        sq = (Xc ** 2).sum(axis=0) / n
        beta = np.zeros(d)
        r = yc.copy()
        for _ in range(self.max_iter):
            delta = 0.0
            for j in range(d):
                if sq[j] == 0:
                    continue
                old = beta[j]
                rho = Xc[:, j] @ r / n + sq[j] * old
                beta[j] = soft_threshold(rho, self.l1) / (sq[j] + 2.0 * self.l2)
                if beta[j] != old:
                    r -= Xc[:, j] * (beta[j] - old)
                    delta = max(delta, abs(beta[j] - old))
            if delta < self.tol:
                break
        self.coef = beta
        self.intercept = float(ybar - mu @ beta)
        return self

    def predict(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=float) @ self.coef
