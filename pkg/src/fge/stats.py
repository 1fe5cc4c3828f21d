"""Shared numerical kernels: OLS, Student-t tails, t-tests and rank correlation.

Every p-value and coefficient table in the engine goes through this module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSampleError, FGEError, SingularDesignError

_NORMAL_DF = 1e6
_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXITER = 100_000


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    residuals: np.ndarray
    residual_sd: float
    n_obs: int
    r_squared: float
    covariance: np.ndarray
    names: tuple[str, ...] = ()

    @property
    def t_stats(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coefficients / self.standard_errors

    @property
    def df_resid(self) -> int:
        return self.n_obs - len(self.coefficients)

    def p_values(self) -> np.ndarray:
        return np.array([t_tail(t, self.df_resid) if np.isfinite(t) else 0.0 for t in self.t_stats])


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: int
    mean: float
    std_error: float
    n: int

    __test__ = False  # keep pytest from collecting this as a test class


def ols(y, X, names: Sequence[str] | None = None) -> OlsFit:
    """Least squares with classical (homoskedastic) standard errors.

    Rank deficiency is reported by naming the first column that is a linear
    combination of the columns before it.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(k))
    if len(y) != n:
        raise FGEError(f"length mismatch: len(y)={len(y)} rows(X)={n}")
    if n <= k:
        raise FGEError(f"need more rows than columns (rows={n}, cols={k})")

    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    colnorm = np.linalg.norm(X, axis=0)
    bad = np.nonzero((colnorm == 0) | (diag <= 1e-10 * colnorm))[0]
    if bad.size:
        raise SingularDesignError(names[bad[0]])

    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    dof = n - k
    sigma2 = float(resid @ resid) / dof
    r_inv = np.linalg.solve(r, np.eye(k))
    cov = sigma2 * (r_inv @ r_inv.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else (1.0 if float(resid @ resid) == 0 else 0.0)
    return OlsFit(beta, se, resid, math.sqrt(sigma2), n, r2, cov, names)


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise FGEError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
              + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_bt) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_bt) * _betacf(b, a, 1.0 - x) / b


def t_tail(t: float, df: float) -> float:
    """Two-sided Student-t tail probability P(|T| >= |t|)."""
    if df < 1:
        raise FGEError(f"degrees of freedom must be >= 1, got {df}")
    t = abs(float(t))
    if t == 0.0:
        return 1.0
    if math.isinf(t):
        return 0.0
    if df > _NORMAL_DF:
        return math.erfc(t / math.sqrt(2.0))
    x = df / (df + t * t)
    p = incomplete_beta(df / 2.0, 0.5, x)
    return min(max(p, 0.0), 1.0)


def one_sample_t(values) -> TestResult:
    v = np.asarray(values, dtype=float)
    n = v.size
    if n < 2:
        raise DegenerateSampleError(f"need at least 2 observations, got {n}")
    mean = float(v.mean())
    sd = float(v.std(ddof=1))
    # a constant sample can leave a rounding-level sd, so test equality directly
    if sd == 0.0 or not np.isfinite(sd) or bool(np.all(v == v[0])):
        raise DegenerateSampleError("sample variance is zero")
    se = sd / math.sqrt(n)
    stat = mean / se
    return TestResult(stat, t_tail(stat, n - 1), n - 1, mean, se, n)


def paired_t(a, b) -> TestResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise FGEError(f"paired samples differ in length: {a.size} vs {b.size}")
    return one_sample_t(a - b)


def rank_average(x) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their positions."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    n = x.size
    # boundaries of runs of equal values
    starts = np.r_[0, np.nonzero(xs[1:] != xs[:-1])[0] + 1]
    ends = np.r_[starts[1:], n]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(n)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    yc = y - y.mean()
    den = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if den == 0.0:
        raise DegenerateSampleError("correlation undefined for constant input")
    return max(-1.0, min(1.0, float(xc @ yc) / den))


def spearman(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise FGEError("spearman needs two equal-length samples of size >= 2")
    return pearson(rank_average(x), rank_average(y))
