"""Test seeded network and reference sampling."""

import numpy as np
import pytest
from scipy.stats import kstest, norm

from gaussnet.gauss_moments import covariance_matrix, network_variance
from gaussnet.model import ActivationSpec, NetworkConfig
from gaussnet.sampler import (
    NonFiniteSampleError,
    SeedSpec,
    dump_samples,
    empirical_covariance,
    sample_network,
    sample_reference,
)
from gaussnet.spectra import SingularMatrixError

TANH = ActivationSpec.builtin("tanh")


def test_same_seed_same_values():
    """Equal (master_seed, stream_index) pairs reproduce bit for bit."""

    cfg = NetworkConfig.unit_slice(8)
    first = sample_network(cfg, TANH, 500, SeedSpec(master_seed=11, stream_index=2))
    second = sample_network(cfg, TANH, 500, SeedSpec(master_seed=11, stream_index=2))
    other = sample_network(cfg, TANH, 500, SeedSpec(master_seed=11, stream_index=3))

    np.testing.assert_array_equal(first.values, second.values)
    assert not np.array_equal(first.values, other.values)
    assert first.config_hash == second.config_hash
    assert first.count == 500


def test_moments_match_the_variance():
    """Mean 0 and variance sigma^2 within Monte-Carlo error."""

    cfg = NetworkConfig(d=2, n=30, sigma_w=1.2, sigma_b=0.4, inputs=[[0.5, -1.0]])
    sigma_sq = network_variance(cfg, TANH)
    batch = sample_network(cfg, TANH, 40_000, SeedSpec(master_seed=1))

    assert abs(np.mean(batch.values)) < 5 * np.sqrt(sigma_sq / batch.count)
    assert np.var(batch.values) == pytest.approx(sigma_sq, rel=0.03)


def test_multi_input_batches_share_weights():
    """Identical inputs give identical outputs within a draw."""

    cfg = NetworkConfig(d=1, n=5, sigma_w=1.0, inputs=[[1.0], [1.0], [-2.0]])
    batch = sample_network(cfg, TANH, 100, SeedSpec())

    assert batch.values.shape == (3, 100)
    assert batch.num_inputs == 3
    np.testing.assert_array_equal(batch.row(0), batch.row(1))


def test_multi_input_covariance():
    cfg = NetworkConfig(d=2, n=50, sigma_w=1.0, inputs=[[1.0, 0.0], [0.6, 0.8]])
    expected = covariance_matrix(cfg, TANH).entries
    batch = sample_network(cfg, TANH, 30_000, SeedSpec(master_seed=9))
    cov, stderr = empirical_covariance(batch)

    assert np.all(np.abs(cov - expected) < 5 * stderr)


def test_non_finite_draws_are_reported():
    blowup = ActivationSpec.custom(
        lambda x: np.where(x > 0, np.inf, 0.0),
        lambda x: np.zeros_like(x),
        lambda x: np.zeros_like(x),
        a=1.0,
        b=0.0,
        gamma=0.0,
    )

    with pytest.raises(NonFiniteSampleError) as info:
        sample_network(NetworkConfig.unit_slice(3), blowup, 50, SeedSpec())

    assert info.value.draw_index >= 0


def test_count_must_be_positive():
    with pytest.raises(ValueError):
        sample_network(NetworkConfig.unit_slice(1), TANH, 0, SeedSpec())

    with pytest.raises(ValueError):
        sample_reference(1.0, 0, SeedSpec())


def test_reference_samples():
    """Scalar and matrix targets give N(0, sigma^2) and N(0, C)."""

    scalar = sample_reference(2.0, 50_000, SeedSpec(master_seed=4))
    assert np.var(scalar.values) == pytest.approx(2.0, rel=0.03)

    target = np.array([[1.0, 0.5], [0.5, 2.0]])
    matrix = sample_reference(target, 50_000, SeedSpec(master_seed=4))
    cov, stderr = empirical_covariance(matrix)
    assert np.all(np.abs(cov - target) < 5 * stderr)


def test_reference_rejects_singular_covariance():
    with pytest.raises(SingularMatrixError):
        sample_reference(np.ones((2, 2)), 10, SeedSpec())

    with pytest.raises(ValueError):
        sample_reference(0.0, 10, SeedSpec())


def test_dump_samples(tmp_path):
    """One draw per line, exact to 17 significant digits."""

    batch = sample_network(NetworkConfig.unit_slice(2), TANH, 7, SeedSpec())
    path = dump_samples(batch, tmp_path / "nested" / "samples.txt")

    lines = path.read_text().splitlines()
    assert len(lines) == 7
    np.testing.assert_array_equal(np.loadtxt(path), batch.values)


def test_neighbouring_streams_are_uncorrelated():
    cfg = NetworkConfig.unit_slice(16)
    count = 20_000
    first = sample_network(cfg, TANH, count, SeedSpec(master_seed=5, stream_index=7))
    second = sample_network(cfg, TANH, count, SeedSpec(master_seed=5, stream_index=8))

    r = np.corrcoef(first.values, second.values)[0, 1]
    assert abs(r) < 4 / np.sqrt(count)


@pytest.mark.parametrize("width", [1, 8, 64, 512])
def test_variance_does_not_depend_on_width(width):
    cfg = NetworkConfig.unit_slice(width)
    sigma_sq = network_variance(cfg, TANH)
    batch = sample_network(cfg, TANH, 20_000, SeedSpec(master_seed=width))

    centered_sq = (batch.values - batch.values.mean()) ** 2
    stderr = centered_sq.std(ddof=1) / np.sqrt(batch.count)
    assert abs(np.var(batch.values, ddof=1) - sigma_sq) < 3 * stderr


def test_zero_activation_leaves_the_bias():
    """With tau = 0 the output is sigma_b b ~ N(0, 1)."""

    zero = ActivationSpec.custom(
        np.zeros_like, np.zeros_like, np.zeros_like, a=0.0, b=0.0, gamma=0.0
    )
    cfg = NetworkConfig(d=1, n=10, sigma_w=1.0, sigma_b=1.0, inputs=[[1.0]])
    batch = sample_network(cfg, zero, 100_000, SeedSpec(master_seed=6))

    assert 0.97 <= np.var(batch.values) <= 1.03


def test_reference_passes_a_ks_self_test():
    batch = sample_reference(1.0, 100_000, SeedSpec(master_seed=12))
    statistic = kstest(batch.values, norm.cdf).statistic

    assert statistic < 1.95 / np.sqrt(100_000)
