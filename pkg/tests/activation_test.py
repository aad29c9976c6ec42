"""Test the activation families and their envelopes."""

import math

import numpy as np
import pytest

from gaussnet.activation import (
    MissingDerivativeError,
    envelope_check,
    evaluate,
    triple,
)
from gaussnet.model import ActivationSpec

FAMILIES = [
    ActivationSpec.builtin("tanh"),
    ActivationSpec.builtin("cubic"),
    ActivationSpec.builtin("identity"),
    ActivationSpec.builtin("softplus-approx", m=1.0),
    ActivationSpec.builtin("softplus-approx", m=8.0),
    ActivationSpec.builtin("sau-approx", m=1.0),
    ActivationSpec.builtin("sau-approx", m=8.0),
]


@pytest.mark.parametrize("act", FAMILIES, ids=lambda act: f"{act.kind.value}-{act.m}")
def test_derivatives_match_finite_differences(act):
    """tau' and tau'' agree with central differences."""

    x = np.linspace(-3.0, 3.0, 61)
    h = 1e-5
    funcs = triple(act)

    d1 = (funcs.value(x + h) - funcs.value(x - h)) / (2 * h)
    d2 = (funcs.d1(x + h) - funcs.d1(x - h)) / (2 * h)

    np.testing.assert_allclose(funcs.d1(x), d1, rtol=1e-6, atol=1e-7)
    np.testing.assert_allclose(funcs.d2(x), d2, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("act", FAMILIES, ids=lambda act: f"{act.kind.value}-{act.m}")
def test_shipped_envelopes_hold(act):
    """Every shipped envelope bounds tau, tau' and tau''."""

    report = envelope_check(act)
    assert report.holds, report


def test_envelope_check_reports_the_worst_point():
    """An envelope that is too tight is caught at the right order."""

    tight = ActivationSpec.builtin("cubic").with_envelope(1.0, 0.0, 0.0)
    report = envelope_check(tight, grid=[-2.0, 0.0, 2.0])

    assert not report.holds
    assert report.worst_excess == pytest.approx(12.0 - 1.0)
    assert abs(report.worst_x) == 2.0
    assert report.worst_order == 1


def test_softplus_is_stable_for_large_arguments():
    """No overflow at m x ~ 1e4."""

    act = ActivationSpec.builtin("softplus-approx", m=100.0)
    assert evaluate(act, 0, 100.0) == pytest.approx(100.0)
    assert evaluate(act, 0, -100.0) == pytest.approx(0.0, abs=1e-300)
    assert evaluate(act, 2, 100.0) == pytest.approx(0.0, abs=1e-300)


def test_relu_approximants_converge():
    """Both sequences approach max(x, 0) as m grows."""

    x = np.array([-1.0, -0.1, 0.3, 2.0])
    for kind in ("softplus-approx", "sau-approx"):
        act = ActivationSpec.builtin(kind, m=1000.0)
        np.testing.assert_allclose(evaluate(act, 0, x), np.maximum(x, 0.0), atol=1e-3)


def test_sau_second_derivative_is_a_gaussian_kernel():
    act = ActivationSpec.builtin("sau-approx", m=2.0)
    assert evaluate(act, 2, 0.0) == pytest.approx(2.0 / math.sqrt(2 * math.pi))


def test_evaluate_shapes():
    """Scalars give floats, arrays give arrays."""

    act = ActivationSpec.builtin("tanh")
    assert isinstance(evaluate(act, 1, 0.5), float)
    assert evaluate(act, 1, [0.0, 1.0]).shape == (2,)

    with pytest.raises(ValueError):
        evaluate(act, 3, 0.0)


def test_custom_activation():
    """Custom callbacks are used as given and missing ones raise on use."""

    act = ActivationSpec.custom(np.sin, np.cos, None, a=1.0, b=0.0, gamma=0.0)
    assert evaluate(act, 1, 0.0) == pytest.approx(1.0)

    with pytest.raises(MissingDerivativeError):
        evaluate(act, 2, 0.0)
