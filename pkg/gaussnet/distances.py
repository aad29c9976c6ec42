"""
Empirical KS, TV and W1 distances from a sample to N(mean, sigma^2), and
between two samples.
"""

import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import ndtr, ndtri

from gaussnet.model import Metric

MIN_TV_SAMPLE = 100
FALLBACK_BINS = 64
FALLBACK_SPAN = 6.0


class DistanceMethod(str, Enum):
    ECDF = "ecdf-vs-cdf"
    COUPLING = "sorted-coupling"
    BINNED = "binned-histogram"


# Which estimator each metric uses
METRIC_METHODS = {
    Metric.KS: DistanceMethod.ECDF,
    Metric.W1: DistanceMethod.COUPLING,
    Metric.TV: DistanceMethod.BINNED,
}


class DistanceEstimate(BaseModel):
    """An empirical distance and how it was estimated."""

    model_config = ConfigDict(frozen=True)

    metric: Metric
    value: float = Field(ge=0)
    sample_size: int = Field(ge=1)
    method: DistanceMethod
    bin_count: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def check_metric(self):
        if self.metric in (Metric.KS, Metric.TV) and self.value > 1.0:
            raise ValueError(f"{self.metric.value} distance {self.value} exceeds 1")

        if METRIC_METHODS[self.metric] != self.method:
            raise ValueError(
                f"{self.metric.value} is estimated by "
                f"{METRIC_METHODS[self.metric].value}, not {self.method.value}"
            )

        return self


def _sorted_sample(sample) -> np.ndarray:
    values = np.asarray(sample, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("sample is empty")

    if not np.all(np.isfinite(values)):
        raise ValueError("sample has non-finite entries")

    return np.sort(values)


def _scale(sigma_sq: float) -> float:
    if not sigma_sq > 0:
        raise ValueError(f"reference variance must be positive, got {sigma_sq}")

    return math.sqrt(sigma_sq)


def ks_to_gaussian(sample, sigma_sq: float, mean: float = 0.0) -> DistanceEstimate:
    """
    Exact one-sample KS statistic
    max_i max(|i/m - Phi(x_(i))|, |(i-1)/m - Phi(x_(i))|).
    """

    x = _sorted_sample(sample)
    sigma = _scale(sigma_sq)
    m = x.size

    cdf = ndtr((x - mean) / sigma)
    upper = np.arange(1, m + 1) / m
    lower = np.arange(0, m) / m
    value = float(max(np.max(np.abs(upper - cdf)), np.max(np.abs(lower - cdf))))

    return DistanceEstimate(
        metric=Metric.KS, value=value, sample_size=m, method=DistanceMethod.ECDF
    )


def w1_to_gaussian(sample, sigma_sq: float, mean: float = 0.0) -> DistanceEstimate:
    """Quantile coupling (1/m) sum_i |x_(i) - sigma Phi^-1((i - 0.5)/m)|."""

    x = _sorted_sample(sample)
    sigma = _scale(sigma_sq)
    m = x.size

    quantiles = mean + sigma * ndtri((np.arange(1, m + 1) - 0.5) / m)
    value = float(np.mean(np.abs(x - quantiles)))

    return DistanceEstimate(
        metric=Metric.W1, value=value, sample_size=m, method=DistanceMethod.COUPLING
    )


def histogram_edges(x: np.ndarray, sigma: float, mean: float = 0.0) -> np.ndarray:
    """
    Freedman-Diaconis edges over [min - h, max + h] with h = 2 IQR m^{-1/3}.

    A sample with zero interquartile range falls back to 64 equal bins over
    mean +/- 6 sigma.
    """

    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = q75 - q25
    if not iqr > 0:
        return np.linspace(
            mean - FALLBACK_SPAN * sigma,
            mean + FALLBACK_SPAN * sigma,
            FALLBACK_BINS + 1,
        )

    width = 2.0 * iqr * x.size ** (-1.0 / 3.0)
    low = x[0] - width
    bins = max(1, math.ceil((x[-1] + width - low) / width))
    return low + width * np.arange(bins + 1)


def tv_to_gaussian(sample, sigma_sq: float, mean: float = 0.0) -> DistanceEstimate:
    """
    Binned TV estimate
    1/2 sum_bins |p_bin - q_bin| + 1/2 (mass outside the bins, both sides).

    Exact TV between an empirical measure and a density is always 1, so the
    line is discretized and the bin count is reported.
    """

    x = _sorted_sample(sample)
    sigma = _scale(sigma_sq)
    m = x.size
    if m < MIN_TV_SAMPLE:
        raise ValueError(f"TV estimation needs at least {MIN_TV_SAMPLE} draws, got {m}")

    edges = histogram_edges(x, sigma, mean)
    counts, _ = np.histogram(x, bins=edges)
    empirical = counts / m
    gaussian = np.diff(ndtr((edges - mean) / sigma))

    value = (
        0.5 * np.sum(np.abs(empirical - gaussian))
        + 0.5 * max(0.0, 1.0 - np.sum(gaussian))
        + 0.5 * max(0.0, 1.0 - np.sum(empirical))
    )

    return DistanceEstimate(
        metric=Metric.TV,
        value=float(min(1.0, value)),
        sample_size=m,
        method=DistanceMethod.BINNED,
        bin_count=len(edges) - 1,
    )


def two_sample_w1(sample_a, sample_b) -> DistanceEstimate:
    """(1/m) sum_i |a_(i) - b_(i)| for equal-size samples."""

    a = _sorted_sample(sample_a)
    b = _sorted_sample(sample_b)
    if a.size != b.size:
        raise ValueError(f"sample sizes differ: {a.size} vs {b.size}")

    return DistanceEstimate(
        metric=Metric.W1,
        value=float(np.mean(np.abs(a - b))),
        sample_size=a.size,
        method=DistanceMethod.COUPLING,
    )


ESTIMATORS = {
    Metric.KS: ks_to_gaussian,
    Metric.TV: tv_to_gaussian,
    Metric.W1: w1_to_gaussian,
}


def distance_to_gaussian(sample, sigma_sq: float, metric) -> DistanceEstimate:
    return ESTIMATORS[Metric(metric)](sample, sigma_sq)


class InterplayReport(BaseModel):
    """All three distances of one sample and the inequalities linking them."""

    ks: DistanceEstimate
    tv: DistanceEstimate
    w1: DistanceEstimate
    ks_below_tv: bool = Field(description="d_KS <= d_TV + tv_slack")
    ks_below_w1_root: bool = Field(description="d_KS <= 2 sqrt(d_W1) + w1_slack")

    @property
    def holds(self) -> bool:
        return self.ks_below_tv and self.ks_below_w1_root


def interplay_report(
    sample,
    sigma_sq: float,
    tv_slack: float = 0.01,
    w1_slack: float = 0.02,
) -> InterplayReport:
    """Estimates every distance and checks d_KS <= d_TV and d_KS <= 2 sqrt(d_W1)."""

    ks = ks_to_gaussian(sample, sigma_sq)
    tv = tv_to_gaussian(sample, sigma_sq)
    w1 = w1_to_gaussian(sample, sigma_sq)

    return InterplayReport(
        ks=ks,
        tv=tv,
        w1=w1,
        ks_below_tv=ks.value <= tv.value + tv_slack,
        ks_below_w1_root=ks.value <= 2.0 * math.sqrt(w1.value) + w1_slack,
    )
