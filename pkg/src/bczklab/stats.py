"""Small estimators shared by the Monte-Carlo harnesses."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy import stats


def binomial_ci(p: float, n: int) -> float:
    """One standard error of a proportion."""
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else math.inf


def tv_from_counts(h0: np.ndarray, h1: np.ndarray) -> tuple[float, float]:
    """Empirical TV between two histograms over the same support, and the sum
    over cells of the standard error of each frequency difference (halved)."""
    n0, n1 = h0.sum(), h1.sum()
    p, q = h0 / n0, h1 / n1
    tv = 0.5 * float(np.abs(p - q).sum())
    ci = 0.5 * float(np.sqrt(p * (1 - p) / n0 + q * (1 - q) / n1).sum())
    return tv, ci


def empirical_tv(a: Iterable[Hashable], b: Iterable[Hashable]) -> tuple[float, float]:
    ca, cb = Counter(a), Counter(b)
    keys = sorted(set(ca) | set(cb), key=repr)
    h0 = np.array([ca[k] for k in keys], dtype=float)
    h1 = np.array([cb[k] for k in keys], dtype=float)
    return tv_from_counts(h0, h1)


@dataclass(frozen=True)
class GeometricFit:
    n: int
    observed: tuple[int, ...]
    expected: tuple[float, ...]
    statistic: float
    pvalue: float
    alpha: float

    @property
    def passed(self) -> bool:
        return self.pvalue >= self.alpha


def geometric_fit(samples: Sequence[int], p: float = 0.5, alpha: float = 0.01, min_expected: float = 5.0) -> GeometricFit:
    """Chi-square goodness of fit of positive integer samples to Geometric(p).

    Bins are 1, 2, ..., K-1 and a lumped tail ``>= K``; K is the largest value
    keeping every expected count at or above ``min_expected``.
    """
    arr = np.asarray(samples, dtype=np.int64)
    n = arr.size
    if n == 0:
        raise ValueError("no samples")
    k = 2
    while n * (1 - p) ** k >= min_expected:
        k += 1
    probs = [(1 - p) ** (i - 1) * p for i in range(1, k)] + [(1 - p) ** (k - 1)]
    obs = [int((arr == i).sum()) for i in range(1, k)] + [int((arr >= k).sum())]
    exp = [n * q for q in probs]
    stat, pval = stats.chisquare(obs, exp)
    return GeometricFit(n, tuple(obs), tuple(exp), float(stat), float(pval), alpha)
