"""Two-sample significance tests for comparing runs.

Welch's unequal-variance t-test (two-sided p through the regularized
incomplete beta function) and the two-sample Kolmogorov-Smirnov test
with the asymptotic Kolmogorov distribution at effective sample size
n*m/(n+m). The special functions are implemented here directly so the
test suite can pin them against an independent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    detail: dict = field(default_factory=dict)


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: float, max_iter: int = 400, eps: float = 3e-16) -> float:
    """Continued fraction for the incomplete beta (modified Lentz iteration)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta fraction failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b))
    # continued fraction converges fast on its own side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution.

    Small arguments use the theta-function form, large ones the alternating
    exponential series; both are the same analytic function, summed to
    machine convergence.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 1.0:
        s = 0.0
        for k in range(1, 40):
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * lam * lam))
            s += term
            if term < 1e-18 * max(s, 1e-300):
                break
        return max(0.0, min(1.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    s = 0.0
    for k in range(1, 200):
        term = (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        s += term
        if abs(term) < 1e-18:
            break
    return max(0.0, min(1.0, 2.0 * s))


def _clean(sample, name) -> np.ndarray:
    arr = np.asarray(sample, dtype=np.float64).reshape(-1)
    if arr.size < 2:
        raise DataError(f"{name} needs at least two observations")
    if not np.isfinite(arr).all():
        raise DataError(f"{name} contains non-finite values")
    return arr


def welch_t_test(x, y) -> TestResult:
    """Two-sided Welch t-test; degrees of freedom by Welch-Satterthwaite."""
    x, y = _clean(x, "x"), _clean(y, "y")
    n, m = x.size, y.size
    vx, vy = x.var(ddof=1), y.var(ddof=1)
    sx, sy = vx / n, vy / m
    se2 = sx + sy
    if se2 == 0.0:
        raise DataError("both samples are constant; t statistic undefined")
    t = (x.mean() - y.mean()) / math.sqrt(se2)
    df = se2 * se2 / (sx * sx / (n - 1) + sy * sy / (m - 1))
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return TestResult("welch_t", float(t), float(p), {"df": float(df), "n": n, "m": m})


def ks_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """sup |F_x - F_y| over the pooled sample points."""
    xs, ys = np.sort(x), np.sort(y)
    pooled = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, pooled, side="right") / xs.size
    fy = np.searchsorted(ys, pooled, side="right") / ys.size
    return float(np.max(np.abs(fx - fy)))


def ks_two_sample(x, y) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test, asymptotic two-sided p-value."""
    x, y = _clean(x, "x"), _clean(y, "y")
    d = ks_statistic(x, y)
    n_eff = x.size * y.size / (x.size + y.size)
    lam = math.sqrt(n_eff) * d
    p = kolmogorov_sf(lam)
    return TestResult(
        "ks_two_sample", d, p, {"n_eff": float(n_eff), "lambda": float(lam), "n": x.size, "m": y.size}
    )
