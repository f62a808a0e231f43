"""Empirical distributions and goodness-of-fit tests."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special, stats


class DegenerateSampleError(ValueError):
    pass


class EmpiricalDistribution:
    """Sorted sample with mergeable summary statistics.

    Merging concatenates and re-sorts, and every statistic is computed from
    the sorted values with exactly rounded sums, so results do not depend on
    the order in which partial samples were merged.
    """

    __slots__ = ("values",)

    def __init__(self, sample=()):
        v = np.asarray(sample, dtype=np.float64).ravel()
        if np.any(np.isnan(v)):
            raise ValueError("NaN in sample")
        self.values = np.sort(v, kind="stable")

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        out = EmpiricalDistribution.__new__(EmpiricalDistribution)
        out.values = np.sort(np.concatenate([self.values, other.values]), kind="stable")
        return out

    __add__ = merge

    def __len__(self):
        return self.values.size

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def sum(self) -> float:
        return math.fsum(self.values)

    @property
    def sum_sq(self) -> float:
        return math.fsum(self.values * self.values)

    @property
    def min(self) -> float:
        return float(self.values[0])

    @property
    def max(self) -> float:
        return float(self.values[-1])

    def mean(self) -> float:
        return self.sum / self.count

    def var(self) -> float:
        m = self.mean()
        return math.fsum((self.values - m) ** 2) / max(self.count - 1, 1)

    def mean_ci(self, z: float = 3.0) -> tuple[float, float, float]:
        m = self.mean()
        half = z * math.sqrt(self.var() / self.count)
        return m, m - half, m + half

    def quantile(self, q: float) -> float:
        # inverted empirical CDF (monotone in q)
        if not 0.0 <= q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        i = max(int(math.ceil(q * self.count)) - 1, 0)
        return float(self.values[i])

    def median(self) -> float:
        return self.quantile(0.5)

    def cdf(self, x) -> np.ndarray:
        return np.searchsorted(self.values, x, side="right") / self.count

    def same_as(self, other: "EmpiricalDistribution") -> bool:
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    pvalue: float
    n: int


def ks_test(sample, cdf: Callable[[np.ndarray], np.ndarray]) -> TestResult:
    """One-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    n = x.size
    if n < 10:
        raise DegenerateSampleError(f"KS test needs at least 10 observations, got {n}")
    if x[0] == x[-1]:
        raise DegenerateSampleError("KS test on a constant sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    return TestResult(d, float(special.kolmogorov(math.sqrt(n) * d)), n)


def ks_2samp(a, b) -> TestResult:
    """Two-sample KS (asymptotic p-value)."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size < 10 or b.size < 10:
        raise DegenerateSampleError("two-sample KS needs at least 10 observations per sample")
    grid = np.concatenate([a, b])
    d = float(np.max(np.abs(np.searchsorted(a, grid, side="right") / a.size
                            - np.searchsorted(b, grid, side="right") / b.size)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    return TestResult(d, float(special.kolmogorov(en * d)), int(a.size + b.size))


def chi2_test(counts, probs, min_expected: float = 5.0) -> TestResult:
    """Pearson chi-square of observed ``counts`` against cell probabilities.

    Cells with expected count below ``min_expected`` are pooled (from the
    tails inwards) before computing the statistic.
    """
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if counts.shape != probs.shape:
        raise ValueError("counts and probabilities differ in shape")
    n = counts.sum()
    if n < 10:
        raise DegenerateSampleError("chi-square test needs at least 10 observations")
    rest = 1.0 - math.fsum(probs)
    exp = probs * n
    obs_cells, exp_cells = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_cells.append(acc_o)
            exp_cells.append(acc_e)
            acc_o = acc_e = 0.0
    acc_e += max(rest, 0.0) * n
    if obs_cells:
        obs_cells[-1] += acc_o
        exp_cells[-1] += acc_e
    if len(obs_cells) < 2:
        raise DegenerateSampleError("fewer than two cells after pooling")
    o = np.array(obs_cells)
    e = np.array(exp_cells)
    chi2 = float(np.sum((o - e) ** 2 / e))
    return TestResult(chi2, float(stats.chi2.sf(chi2, len(o) - 1)), int(n))


def binomial_ci(k: int, n: int, z: float = 3.0) -> tuple[float, float, float]:
    """Wilson interval for a proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = k / n
    den = 1.0 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return p, max(mid - half, 0.0), min(mid + half, 1.0)


def jitter(values, width, seed_stream) -> np.ndarray:
    """Spread lattice values uniformly over one lattice cell of ``width``."""
    u = seed_stream.uniforms(np.size(values))
    return np.asarray(values, dtype=np.float64) + np.asarray(width) * u
