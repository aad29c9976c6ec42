"""Test the network derivatives and the Monte-Carlo Poincare estimates."""

import math
from functools import partial

import numpy as np
import pytest

from gaussnet.bounds import closed_form_bound, unit_slice_bound
from gaussnet.model import ActivationSpec, Metric, NetworkConfig
from gaussnet.poincare import (
    ParameterPoint,
    PoincareEstimateError,
    analytic_derivatives,
    augmented_inputs,
    chatterjee_tv_bound_mc,
    chunk_sizes,
    collapsed_output,
    gaussian_poincare_check,
    multi_block_derivatives,
    poincare_bound_mc,
    poincare_bound_multi_mc,
    poincare_sum_dense,
    poincare_sum_mc,
    raw_derivatives,
)
from gaussnet.sampler import SeedSpec
from gaussnet.spectra import SingularMatrixError

TANH = ActivationSpec.builtin("tanh")
CUBIC = ActivationSpec.builtin("cubic")
STEP = 1e-5


def shifted(point: ParameterPoint, name: str, index: int, delta: float):
    w, y, b = point.w.copy(), point.y.copy(), float(point.b)
    if name == "w":
        w[index] += delta
    elif name == "y":
        y[index] += delta
    else:
        b += delta

    return ParameterPoint(w=w, y=y, b=b)


def central(func, point, name, index):
    forward = func(shifted(point, name, index, STEP))
    backward = func(shifted(point, name, index, -STEP))
    return (forward - backward) / (2 * STEP)


@pytest.mark.parametrize("act", [TANH, CUBIC], ids=["tanh", "cubic"])
@pytest.mark.parametrize("width", [1, 5, 20])
def test_derivatives_match_finite_differences(act, width):
    """Gradient and Hessian blocks agree with central differences."""

    cfg = NetworkConfig(d=1, n=width, sigma_w=1.3, sigma_b=0.4, inputs=[[0.8]])
    rng = np.random.default_rng(width)

    def output(point):
        return float(collapsed_output(cfg, act, point))

    for _ in range(50):
        point = ParameterPoint(
            w=rng.standard_normal(width), y=rng.standard_normal(width), b=0.3
        )
        bundle = analytic_derivatives(cfg, act, point)

        def grad_w(p, j):
            return analytic_derivatives(cfg, act, p).grad_w[j]

        for j in range(width):
            np.testing.assert_allclose(
                bundle.grad_w[j], central(output, point, "w", j), rtol=1e-6, atol=1e-8
            )
            np.testing.assert_allclose(
                bundle.grad_y[j], central(output, point, "y", j), rtol=1e-6, atol=1e-8
            )
            np.testing.assert_allclose(
                bundle.hess_wy[j],
                central(lambda p: grad_w(p, j), point, "y", j),
                rtol=1e-6,
                atol=1e-8,
            )
            np.testing.assert_allclose(
                bundle.hess_yy[j],
                central(
                    lambda p: analytic_derivatives(cfg, act, p).grad_y[j],
                    point,
                    "y",
                    j,
                ),
                rtol=1e-6,
                atol=1e-8,
            )

        assert bundle.grad_b == pytest.approx(central(output, point, "b", 0))


def test_raw_derivatives_match_collapsed_on_the_unit_slice():
    """At Gamma = 1 the raw and collapsed parametrizations coincide."""

    cfg = NetworkConfig.unit_slice(6)
    rng = np.random.default_rng(1)
    w, w0 = rng.standard_normal((2, 6))

    raw = raw_derivatives(cfg, TANH, w, w0)
    collapsed = analytic_derivatives(cfg, TANH, ParameterPoint(w=w, y=w0))

    np.testing.assert_allclose(raw.gradient, collapsed.gradient, rtol=1e-14)
    np.testing.assert_allclose(raw.hess_wy, collapsed.hess_wy, rtol=1e-14)
    np.testing.assert_allclose(raw.hess_yy, collapsed.hess_yy, rtol=1e-14)

    with pytest.raises(ValueError):
        raw_derivatives(cfg.model_copy(update={"sigma_b": 1.0}), TANH, w, w0)


def test_dense_hessian_layout():
    point = ParameterPoint(w=np.array([0.5, -1.0]), y=np.array([0.2, 0.7]))
    bundle = analytic_derivatives(NetworkConfig.unit_slice(2), TANH, point)
    hessian = bundle.dense_hessian()

    assert hessian.shape == (5, 5)
    np.testing.assert_array_equal(hessian, hessian.T)
    assert hessian[0, 2] == bundle.hess_wy[0]
    assert hessian[3, 3] == bundle.hess_yy[1]
    assert hessian[0, 1] == 0.0
    assert np.all(hessian[4] == 0.0)

    blocks = bundle.block_operator_norms()
    for j in range(2):
        block = hessian[np.ix_([j, 2 + j], [j, 2 + j])]
        assert blocks[j] == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(block))))


def test_multi_block_derivatives_match_finite_differences():
    cfg = NetworkConfig(
        d=2, n=1, sigma_w=1.1, sigma_b=0.5, inputs=[[1.0, -0.5], [0.3, 0.9]]
    )
    x_aug = augmented_inputs(cfg)
    rng = np.random.default_rng(4)
    w = float(rng.standard_normal())
    v = rng.standard_normal(3)

    def unit(w, v):
        return w * np.tanh(x_aug @ v)

    blocks = multi_block_derivatives(cfg, TANH, np.array(w), v)

    params = np.concatenate([[w], v])
    for slot in range(4):
        step = np.zeros(4)
        step[slot] = STEP
        plus, minus = params + step, params - step
        expected = (unit(plus[0], plus[1:]) - unit(minus[0], minus[1:])) / (2 * STEP)
        np.testing.assert_allclose(blocks.gradient[:, slot], expected, rtol=1e-6)

        grad_plus = multi_block_derivatives(cfg, TANH, np.array(plus[0]), plus[1:])
        grad_minus = multi_block_derivatives(cfg, TANH, np.array(minus[0]), minus[1:])
        column = (grad_plus.gradient - grad_minus.gradient) / (2 * STEP)
        np.testing.assert_allclose(
            blocks.hessian[:, :, slot], column, rtol=1e-6, atol=1e-9
        )


def test_chunk_sizes():
    assert chunk_sizes(100_000, 10_000) == [10_000] * 10
    assert chunk_sizes(5, 100) == [1] * 5
    assert sum(chunk_sizes(25, 10)) == 25
    assert len(chunk_sizes(25, 10)) == 10

    with pytest.raises(ValueError):
        chunk_sizes(0, 10)


@pytest.mark.parametrize("width", [1, 3, 5])
def test_sparse_sum_equals_dense_sum(width):
    """The O(n) reduction equals the naive double sum on identical draws."""

    cfg = NetworkConfig(d=1, n=width, sigma_w=1.2, sigma_b=0.3, inputs=[[0.7]])
    seed = SeedSpec(master_seed=17)

    sparse, _ = poincare_sum_mc(cfg, TANH, mc_samples=2000, seed=seed)
    dense = poincare_sum_dense(cfg, TANH, mc_samples=2000, seed=seed)

    assert sparse == pytest.approx(dense, abs=1e-12)


def test_identity_sum_has_a_closed_form():
    """For tau = identity the sum is 2 sqrt(3) sigma_w^4 Gamma^4 / n."""

    cfg = NetworkConfig(d=1, n=10, sigma_w=1.0, sigma_b=0.0, inputs=[[1.5]])
    estimate, error = poincare_sum_mc(
        cfg, ActivationSpec.builtin("identity"), mc_samples=100_000
    )

    expected = 2.0 * math.sqrt(3.0) * 1.5**4 / 10
    assert estimate == pytest.approx(expected, rel=0.02)
    assert error is not None and error > 0


def test_estimates_are_deterministic():
    cfg = NetworkConfig.unit_slice(7)
    first = poincare_bound_mc(cfg, TANH, mc_samples=5000, seed=SeedSpec(master_seed=2))
    second = poincare_bound_mc(cfg, TANH, mc_samples=5000, seed=SeedSpec(master_seed=2))

    assert first == second
    assert first.source == "poincare-mc"


@pytest.mark.parametrize("width", [10, 100])
def test_closed_form_dominates_the_poincare_estimate(width):
    """The Poincare estimate stays below the unit-slice closed form."""

    cfg = NetworkConfig.unit_slice(width)
    estimate = poincare_bound_mc(cfg, TANH, Metric.W1, mc_samples=100_000)
    closed = unit_slice_bound(width, TANH, Metric.W1)

    assert estimate.value <= closed.value + 3 * estimate.standard_error
    assert estimate.value * math.sqrt(width) == pytest.approx(estimate.constant)


def test_metric_scaling_of_the_poincare_estimate():
    cfg = NetworkConfig.unit_slice(4)
    tv = poincare_bound_mc(cfg, TANH, "TV", mc_samples=3000)
    ks = poincare_bound_mc(cfg, TANH, "KS", mc_samples=3000)

    assert tv.value / ks.value == pytest.approx(2.0, rel=1e-12)


def test_non_finite_moments_are_reported():
    blowup = ActivationSpec.custom(
        lambda x: np.exp(x**4),
        lambda x: 4 * x**3 * np.exp(x**4),
        lambda x: (12 * x**2 + 16 * x**6) * np.exp(x**4),
        a=1.0,
        b=1.0,
        gamma=1.0,
    )

    with pytest.raises(PoincareEstimateError) as info:
        poincare_sum_mc(NetworkConfig.unit_slice(2), blowup, mc_samples=50_000)

    assert info.value.term


def test_multi_input_estimate():
    cfg = NetworkConfig(d=1, n=20, sigma_w=1.0, inputs=[[1.0], [-0.5]])
    report = poincare_bound_multi_mc(cfg, TANH, mc_samples=5000)

    assert report.metric == Metric.W1
    assert report.source == "poincare-multi-mc"
    assert report.spectrum[0] >= report.spectrum[1] > 0
    assert report.value > 0
    assert report.standard_error is not None


def test_multi_input_estimate_rejects_duplicated_inputs():
    cfg = NetworkConfig(d=1, n=5, sigma_w=1.0, inputs=[[1.0], [1.0]])

    with pytest.raises(SingularMatrixError):
        poincare_bound_multi_mc(cfg, TANH, mc_samples=100)


def test_chatterjee_bound():
    """The first-order TV bound targets the same variance and is reproducible."""

    cfg = NetworkConfig.unit_slice(50)
    first = chatterjee_tv_bound_mc(cfg, TANH, mc_samples=20_000)
    second = chatterjee_tv_bound_mc(cfg, TANH, mc_samples=20_000)
    poincare = poincare_bound_mc(cfg, TANH, Metric.TV, mc_samples=20_000)

    assert first == second
    assert first.metric == Metric.TV
    assert first.source == "chatterjee-mc"
    assert first.sigma_sq == poincare.sigma_sq
    assert first.value > 0
    assert first.standard_error is not None


def test_gaussian_poincare_inequality():
    """Var f(N) <= E f'(N)^2, with equality for affine f."""

    check = gaussian_poincare_check(np.sin, np.cos, mc_samples=50_000)
    assert check.holds
    assert check.variance < check.energy

    affine = gaussian_poincare_check(lambda z: 3 * z + 1, lambda z: 3 + 0 * z)
    assert affine.holds
    assert affine.variance == pytest.approx(9.0, rel=0.02)

    with pytest.raises(ValueError):
        gaussian_poincare_check(np.sin, np.cos, mc_samples=1)


def test_estimates_do_not_depend_on_threads():
    """Every chunk owns its stream, so the worker count cannot change a result."""

    cfg = NetworkConfig.unit_slice(12)
    multi = NetworkConfig(d=1, n=6, sigma_w=1.0, inputs=[[1.0], [-0.5]])
    options = {"mc_samples": 4000, "seed": SeedSpec(master_seed=4)}

    assert poincare_bound_mc(cfg, TANH, threads=1, **options) == poincare_bound_mc(
        cfg, TANH, threads=4, **options
    )
    assert poincare_bound_multi_mc(
        multi, TANH, threads=1, **options
    ) == poincare_bound_multi_mc(multi, TANH, threads=4, **options)
    assert chatterjee_tv_bound_mc(
        cfg, TANH, threads=1, **options
    ) == chatterjee_tv_bound_mc(cfg, TANH, threads=4, **options)


def test_derivatives_rescale_with_the_weight_scale():
    """
    Multiplying sigma_w by c at Y equals the sigma_w derivatives at c Y,
    times c for dF/dw, c^2 for dF/dY and d2F/dw dY, c^3 for d2F/dY^2.
    """

    close = partial(np.testing.assert_allclose, rtol=1e-9, atol=1e-12)
    rng = np.random.default_rng(21)
    base = NetworkConfig(d=2, n=9, sigma_w=0.7, inputs=[[0.3, -1.1]])
    for c in (0.5, 2.0, 3.5):
        scaled = NetworkConfig(d=2, n=9, sigma_w=0.7 * c, inputs=[[0.3, -1.1]])
        point = ParameterPoint.draw(rng, 9, 5)
        stretched = ParameterPoint(w=point.w, y=c * point.y, b=point.b)

        at_scale = analytic_derivatives(scaled, TANH, point)
        reference = analytic_derivatives(base, TANH, stretched)

        close(at_scale.grad_w, c * reference.grad_w)
        close(at_scale.grad_y, c**2 * reference.grad_y)
        close(at_scale.hess_wy, c**2 * reference.hess_wy)
        close(at_scale.hess_yy, c**3 * reference.hess_yy)


def test_single_input_multi_estimate_matches_the_one_dimensional_sum():
    """With p = 1 both estimators share the inner sum and differ in the constant."""

    cfg = NetworkConfig.unit_slice(10)
    single = poincare_bound_mc(cfg, TANH, Metric.W1, mc_samples=100_000)
    multi = poincare_bound_multi_mc(cfg, TANH, mc_samples=100_000)

    assert math.sqrt(multi.inner_sum) == pytest.approx(
        math.sqrt(single.inner_sum), rel=0.02
    )
    assert multi.value == pytest.approx(2.0 * math.sqrt(multi.inner_sum))
    assert single.value == pytest.approx(
        Metric.W1.constant(single.sigma_sq) * math.sqrt(single.inner_sum)
    )


def test_closed_form_dominates_the_multi_input_estimate():
    cfg = NetworkConfig(d=2, n=64, sigma_w=1.0, inputs=[[1.0, 0.0], [0.0, 1.0]])

    estimate = poincare_bound_multi_mc(cfg, TANH, mc_samples=20_000)
    closed = closed_form_bound(cfg, TANH, Metric.W1)

    assert estimate.value <= closed.value


def test_gaussian_poincare_examples():
    """x^2 has Var 2 against E f'^2 = 4; tanh sits below E sech^4."""

    square = gaussian_poincare_check(lambda z: z**2, lambda z: 2 * z)
    assert square.variance == pytest.approx(2.0, rel=0.05)
    assert square.energy == pytest.approx(4.0, rel=0.03)
    assert square.holds

    tanh = gaussian_poincare_check(np.tanh, lambda z: 1.0 / np.cosh(z) ** 2)
    assert tanh.holds
    assert tanh.variance < tanh.energy
