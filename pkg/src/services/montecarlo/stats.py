import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.stats


class StreamingMoments:
    """
    Running count, mean and second central moment (Welford), with an associative
    merge (Chan et al.) so that per-worker accumulators combine exactly once.
    """

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.min = math.inf
        self.max = -math.inf

    def update(self, value: float) -> None:
        value = float(value)
        self.n += 1
        delta = value - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (value - self.mean)
        self.min = min(self.min, value)
        self.max = max(self.max, value)

    def update_batch(self, values: Iterable[float]) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            return
        other = StreamingMoments()
        other.n = int(values.size)
        other.mean = float(np.mean(values))
        other.m2 = float(np.sum((values - other.mean) ** 2))
        other.min = float(np.min(values))
        other.max = float(np.max(values))
        self.merge(other)

    def merge(self, other: "StreamingMoments") -> "StreamingMoments":
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            self.min, self.max = other.min, other.max
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n
        self.min = min(self.min, other.min)
        self.max = max(self.max, other.max)
        return self

    @property
    def variance(self) -> float:
        """Unbiased sample variance (nan below two samples)."""
        if self.n < 2:
            return math.nan
        return self.m2 / (self.n - 1)

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return math.nan
        return math.sqrt(self.variance / self.n)

    def to_dict(self):
        return {
            "n": self.n,
            "mean": self.mean if self.n else None,
            "stderr": self.stderr if self.n >= 2 else None,
            "min": self.min if self.n else None,
            "max": self.max if self.n else None,
        }


def binomial_band(p: float, n: int, sigmas: float = 3.0) -> float:
    """Half-width of a sigmas-wide band for an empirical frequency with success probability p."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return sigmas * math.sqrt(p * (1.0 - p) / n)


def family_sigmas(sigmas: float, count: int) -> float:
    """
    Per-test |z| threshold for `count` simultaneous tests whose family-wise
    false alarm rate equals that of one two-sided `sigmas` test (Sidak).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    alpha = 2.0 * scipy.stats.norm.sf(sigmas)
    per_test = -math.expm1(math.log1p(-alpha) / count)
    return float(scipy.stats.norm.isf(0.5 * per_test))


def within_sigmas(estimate: float, target: float, stderr: float, sigmas: float = 3.0) -> bool:
    return abs(estimate - target) <= sigmas * stderr


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float
    samples: int

    def passes(self, tolerance: float) -> bool:
        return self.statistic <= tolerance

    def to_dict(self):
        return {"ks_statistic": self.statistic, "p_value": self.pvalue, "samples": self.samples}


def ks_uniform(samples) -> KsResult:
    """Kolmogorov-Smirnov distance of the samples to Uniform[0, 1]."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("no samples")
    result = scipy.stats.kstest(samples, "uniform")
    return KsResult(float(result.statistic), float(result.pvalue), int(samples.size))


def ks_arcsine(samples) -> KsResult:
    """Distance to the arcsine law on [0, 1], the occupation limit of simple random walk."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("no samples")
    result = scipy.stats.kstest(samples, scipy.stats.arcsine.cdf)
    return KsResult(float(result.statistic), float(result.pvalue), int(samples.size))


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("distributions have different supports")
    return 0.5 * float(np.sum(np.abs(p - q)))
