"""Test the empirical distance estimators against scipy oracles."""

import math

import numpy as np
import pytest
from scipy.special import ndtr
from scipy.stats import kstest, norm, wasserstein_distance

from gaussnet.distances import (
    FALLBACK_BINS,
    MIN_TV_SAMPLE,
    DistanceEstimate,
    DistanceMethod,
    distance_to_gaussian,
    histogram_edges,
    interplay_report,
    ks_to_gaussian,
    tv_to_gaussian,
    two_sample_w1,
    w1_to_gaussian,
)
from gaussnet.model import Metric


def test_ks_matches_scipy():
    rng = np.random.default_rng(0)
    sample = rng.standard_t(5, size=777)

    estimate = ks_to_gaussian(sample, 2.0, mean=0.1)
    expected = kstest(sample, norm(loc=0.1, scale=math.sqrt(2.0)).cdf).statistic

    assert estimate.value == pytest.approx(expected, abs=1e-12)
    assert estimate.method == DistanceMethod.ECDF
    assert estimate.sample_size == 777


def test_ks_single_point():
    """One draw at the median is 1/2 away in KS."""

    assert ks_to_gaussian([0.0], 1.0).value == pytest.approx(0.5)


def test_w1_matches_the_quantile_coupling():
    rng = np.random.default_rng(1)
    sample = rng.exponential(size=500)
    sigma = 1.5
    quantiles = sigma * norm.ppf((np.arange(1, 501) - 0.5) / 500)

    estimate = w1_to_gaussian(sample, sigma**2)

    assert estimate.value == pytest.approx(
        wasserstein_distance(sample, quantiles), rel=1e-12
    )


def test_w1_detects_a_shift():
    """W1 between N(1, 1) and N(0, 1) is 1."""

    sample = np.random.default_rng(2).normal(1.0, 1.0, size=100_000)
    assert w1_to_gaussian(sample, 1.0).value == pytest.approx(1.0, abs=0.02)


@pytest.mark.parametrize("scale", [0.25, 3.0])
def test_w1_is_scale_equivariant(scale):
    sample = np.random.default_rng(9).standard_t(6, size=2000)

    scaled = w1_to_gaussian(scale * sample, scale**2 * 1.5)
    assert scaled.value == pytest.approx(
        scale * w1_to_gaussian(sample, 1.5).value, rel=1e-12
    )


def test_ks_is_shift_invariant():
    """Shifting the sample and the Gaussian mean together leaves KS alone."""

    sample = np.random.default_rng(10).normal(size=3000)

    shifted = ks_to_gaussian(sample + 2.5, 1.0, mean=2.5)
    assert shifted.value == pytest.approx(ks_to_gaussian(sample, 1.0).value, abs=1e-12)


def test_two_sample_w1_matches_scipy():
    rng = np.random.default_rng(3)
    a = rng.normal(size=300)
    b = rng.normal(0.5, 2.0, size=300)

    estimate = two_sample_w1(a, b)
    assert estimate.value == pytest.approx(wasserstein_distance(a, b), rel=1e-12)

    with pytest.raises(ValueError):
        two_sample_w1(a, b[:10])


def test_tv_of_gaussian_samples():
    """Small for the right Gaussian, close to the exact TV for a shifted one."""

    rng = np.random.default_rng(4)
    sample = rng.standard_normal(100_000)

    assert tv_to_gaussian(sample, 1.0).value < 0.05

    shifted = tv_to_gaussian(sample + 1.0, 1.0)
    exact = 2.0 * ndtr(0.5) - 1.0
    assert shifted.value == pytest.approx(exact, abs=0.03)
    assert shifted.bin_count > 1
    assert shifted.method == DistanceMethod.BINNED


def test_tv_needs_enough_draws():
    with pytest.raises(ValueError):
        tv_to_gaussian(np.zeros(MIN_TV_SAMPLE - 1), 1.0)


def test_histogram_edges():
    """Freedman-Diaconis covers the sample, a constant sample falls back."""

    x = np.sort(np.random.default_rng(5).standard_normal(1000))
    edges = histogram_edges(x, 1.0)

    assert edges[0] < x[0] and edges[-1] > x[-1]
    np.testing.assert_allclose(np.diff(edges), edges[1] - edges[0])

    constant = histogram_edges(np.zeros(200), 2.0, mean=1.0)
    assert len(constant) == FALLBACK_BINS + 1
    assert constant[0] == pytest.approx(-11.0)
    assert constant[-1] == pytest.approx(13.0)


def test_tv_of_a_constant_sample_is_large():
    assert tv_to_gaussian(np.zeros(200), 1.0).value > 0.9


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ks_to_gaussian([], 1.0)

    with pytest.raises(ValueError):
        ks_to_gaussian([1.0, np.nan], 1.0)

    with pytest.raises(ValueError):
        w1_to_gaussian([1.0], 0.0)


def test_estimate_validation():
    with pytest.raises(ValueError):
        DistanceEstimate(
            metric=Metric.KS, value=1.5, sample_size=1, method=DistanceMethod.ECDF
        )

    with pytest.raises(ValueError):
        DistanceEstimate(
            metric=Metric.W1, value=0.1, sample_size=1, method=DistanceMethod.ECDF
        )


def test_dispatch_by_metric():
    sample = np.random.default_rng(6).standard_normal(200)

    for metric in Metric:
        estimate = distance_to_gaussian(sample, 1.0, metric.value.lower())
        assert estimate.metric == metric


def test_interplay_holds_for_gaussian_and_heavy_tailed_samples():
    rng = np.random.default_rng(7)

    for sample in (rng.standard_normal(5000), rng.standard_t(3, size=5000)):
        report = interplay_report(sample, 1.0)
        assert report.holds
        assert report.ks.value <= report.tv.value + 0.01
