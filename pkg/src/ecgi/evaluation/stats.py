"""Nonparametric tests, rank correlation and descriptive spread.

Only distribution tails (normal, chi-square) and ``rankdata`` come from scipy;
the test statistics and exact null distributions are computed here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import chi2, rankdata

from ..beats import BeatDataset
from ..errors import AllZeroDifferences, ConstantInput, LengthMismatch, TooFewBeats, TooFewGroups, TooFewValues
from ..segments import segment_means

EXACT_WILCOXON_MAX_N = 25
EXACT_KENDALL_MAX_N = 8


@dataclass(frozen=True)
class StatTestResult:
    statistic: float
    p_value: float
    method: str
    n: int


def confidence_interval_95(values) -> tuple[float, float]:
    """mean +/- 1.96 population standard deviations, unclamped."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise TooFewValues("need at least two values")
    half = 1.96 * v.std()
    return float(v.mean() - half), float(v.mean() + half)


def _poly(coefs, x):
    return sum(c * x**i for i, c in enumerate(coefs))


def _swilk_coefficients(n: int) -> np.ndarray:
    """Royston's approximation to the Shapiro-Wilk weights, lower half (positive)."""
    if n == 3:
        return np.array([np.sqrt(0.5)])
    m = ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    summ2 = np.sum(m**2)
    ssumm2 = np.sqrt(summ2)
    rsn = 1.0 / np.sqrt(n)
    a = -m[: n // 2] / ssumm2
    a1 = _poly([0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056], rsn) - m[0] / ssumm2
    if n > 5:
        a2 = -m[1] / ssumm2 + _poly([0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633], rsn)
        fac = np.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1**2 - 2 * a2**2))
        a = -m[: n // 2] / fac
        a[0], a[1] = a1, a2
    else:
        fac = np.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1**2))
        a = -m[: n // 2] / fac
        a[0] = a1
    return a


def shapiro_wilk(values) -> StatTestResult:
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = len(x)
    if n < 3:
        raise TooFewValues("Shapiro-Wilk needs at least 3 values")
    if n > 5000:
        raise ValueError("Shapiro-Wilk approximation is valid for n <= 5000")
    if x[-1] - x[0] == 0:
        raise ConstantInput("Shapiro-Wilk is undefined for constant input")
    a = _swilk_coefficients(n)
    half = n // 2
    num = np.dot(a, x[::-1][:half] - x[:half]) ** 2
    w = min(num / np.sum((x - x.mean()) ** 2), 1.0)

    if n == 3:
        p = max(0.0, 6.0 / np.pi * (np.arcsin(np.sqrt(w)) - np.arcsin(np.sqrt(0.75))))
        return StatTestResult(float(w), float(min(p, 1.0)), "shapiro-wilk", n)
    w1 = np.log1p(-w) if w < 1 else -np.inf
    if n <= 11:
        gamma = _poly([-2.273, 0.459], n)
        if w1 >= gamma:
            return StatTestResult(float(w), 1e-99, "shapiro-wilk", n)
        mu = _poly([0.544, -0.39978, 0.025054, -6.714e-4], n)
        sigma = np.exp(_poly([1.3822, -0.77857, 0.062767, -0.0020322], n))
        z = (-np.log(gamma - w1) - mu) / sigma
    else:
        ln = np.log(n)
        mu = _poly([-1.5861, -0.31082, -0.083751, 0.0038915], ln)
        sigma = np.exp(_poly([-0.4803, -0.082676, 0.0030302], ln))
        z = (w1 - mu) / sigma
    return StatTestResult(float(w), float(1.0 - ndtr(z)), "shapiro-wilk", n)


def _tie_sizes(x) -> np.ndarray:
    _, counts = np.unique(x, return_counts=True)
    return counts.astype(np.float64)


def kruskal_wallis(groups) -> StatTestResult:
    groups = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if len(groups) < 2 or any(g.size == 0 for g in groups):
        raise TooFewGroups("need at least two non-empty groups")
    pooled = np.concatenate(groups)
    N = pooled.size
    ranks = rankdata(pooled)
    bounds = np.cumsum([0] + [g.size for g in groups])
    h = sum(ranks[lo:hi].sum() ** 2 / (hi - lo) for lo, hi in zip(bounds[:-1], bounds[1:]))
    h = 12.0 / (N * (N + 1)) * h - 3 * (N + 1)
    t = _tie_sizes(pooled)
    correction = 1 - np.sum(t**3 - t) / (N**3 - N)
    if correction <= 0:
        raise ConstantInput("all observations are identical")
    h /= correction
    return StatTestResult(float(h), float(chi2.sf(h, len(groups) - 1)), "kruskal-wallis", N)


def _signed_rank_null(doubled_ranks: np.ndarray) -> np.ndarray:
    """Probability of each achievable doubled positive-rank sum under random signs."""
    total = int(doubled_ranks.sum())
    dist = np.zeros(total + 1)
    dist[0] = 1.0
    for r in doubled_ranks.astype(np.int64):
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[: total + 1 - r]
        dist = 0.5 * (dist + shifted)
    return dist


def wilcoxon_signed_rank(a, b) -> StatTestResult:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch("paired samples must have equal length")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise AllZeroDifferences("every paired difference is zero")
    r = rankdata(np.abs(d))
    r_plus = float(r[d > 0].sum())
    r_minus = float(r[d < 0].sum())
    stat = min(r_plus, r_minus)
    if n <= EXACT_WILCOXON_MAX_N:
        dist = _signed_rank_null(np.rint(2 * r))
        k = int(round(2 * r_plus))
        p = 2 * min(dist[: k + 1].sum(), dist[k:].sum())
        return StatTestResult(stat, float(min(p, 1.0)), "wilcoxon-exact", n)
    mean = n * (n + 1) / 4
    t = _tie_sizes(np.abs(d))
    var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(t**3 - t) / 48
    z = (stat - mean) / np.sqrt(var)
    return StatTestResult(stat, float(min(2 * ndtr(-abs(z)), 1.0)), "wilcoxon-normal", n)


def _concordance(a: np.ndarray, b: np.ndarray) -> float:
    """``concordant - discordant`` over all pairs (ties contribute zero)."""
    i, j = np.triu_indices(len(a), k=1)
    return float(np.sum(np.sign(a[i] - a[j]) * np.sign(b[i] - b[j])))


def _tau_b(a, b, s=None):
    n = len(a)
    n0 = n * (n - 1) / 2
    ta, tb = _tie_sizes(a), _tie_sizes(b)
    n1 = np.sum(ta * (ta - 1)) / 2
    n2 = np.sum(tb * (tb - 1)) / 2
    s = _concordance(a, b) if s is None else s
    return s / np.sqrt((n0 - n1) * (n0 - n2))


def kendall_tau(a, b) -> StatTestResult:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch("kendall_tau inputs must have equal length")
    n = a.size
    if n < 2:
        raise TooFewValues("need at least two pairs")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ConstantInput("kendall_tau is undefined for a constant input")
    s = _concordance(a, b)
    tau = float(min(1.0, max(-1.0, _tau_b(a, b, s))))
    if n <= EXACT_KENDALL_MAX_N:
        i, j = np.triu_indices(n, k=1)
        sa = np.sign(a[i] - a[j])
        perms = np.array(list(itertools.permutations(range(n))))
        bp = b[perms]
        null = np.abs((np.sign(bp[:, i] - bp[:, j]) * sa).sum(axis=1))
        p = float(np.mean(null >= abs(s) - 1e-9))
        return StatTestResult(tau, p, "kendall-exact", n)
    ta, tb = _tie_sizes(a), _tie_sizes(b)
    var = ((n * (n - 1) * (2 * n + 5) - np.sum(ta * (ta - 1) * (2 * ta + 5))
            - np.sum(tb * (tb - 1) * (2 * tb + 5))) / 18
           + np.sum(ta * (ta - 1) * (ta - 2)) * np.sum(tb * (tb - 1) * (tb - 2)) / (9 * n * (n - 1) * (n - 2))
           + np.sum(ta * (ta - 1)) * np.sum(tb * (tb - 1)) / (2 * n * (n - 1)))
    z = s / np.sqrt(var)
    return StatTestResult(tau, float(min(2 * ndtr(-abs(z)), 1.0)), "kendall-normal", n)


def kendall_matrix(vectors: dict[str, np.ndarray]) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Pairwise tau and p-value matrices (diagonal tau = 1, p = 0)."""
    names = list(vectors)
    if len(names) < 2:
        raise TooFewGroups("need at least two vectors")
    k = len(names)
    tau, p = np.eye(k), np.zeros((k, k))
    for i, j in itertools.combinations(range(k), 2):
        res = kendall_tau(vectors[names[i]], vectors[names[j]])
        tau[i, j] = tau[j, i] = res.statistic
        p[i, j] = p[j, i] = res.p_value
    return names, tau, p


def wilcoxon_matrix(samples: dict[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    """Pairwise two-sided p-values; the diagonal is NaN (not tested)."""
    names = list(samples)
    k = len(names)
    p = np.full((k, k), np.nan)
    for i, j in itertools.combinations(range(k), 2):
        try:
            res = wilcoxon_signed_rank(samples[names[i]], samples[names[j]]).p_value
        except AllZeroDifferences:
            res = 1.0
        p[i, j] = p[j, i] = res
    return names, p


def variance_per_segment(data: BeatDataset, class_id: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Variance of segment means across beats (11) and pointwise variance across beats (220)."""
    X = data.X if class_id is None else data.X[data.y == class_id]
    if len(X) < 2:
        raise TooFewBeats(f"need at least two beats, got {len(X)}")
    return segment_means(X).var(axis=0), X.var(axis=0)
