"""
Closed-form n^{-1/2} bounds on the distance between the network output and
its Gaussian limit.
"""

import math
from typing import Optional, Union

from gaussnet.gauss_moments import (
    QuadratureRule,
    covariance_matrix,
    envelope_l4,
    network_variance,
)
from gaussnet.model import (
    ActivationSpec,
    BoundBreakdown,
    BoundReport,
    Metric,
    NetworkConfig,
)
from gaussnet.spectra import symmetric_eigenvalues

# sqrt(3 (1 + sqrt 2)), the geometry radical at Gamma = 1
UNIT_RADICAL = math.sqrt(3.0 * (1.0 + math.sqrt(2.0)))


class MetricNotProvidedError(ValueError):
    """Raised when a bound is requested for a metric it does not cover"""

    pass


class DegenerateVarianceError(ArithmeticError):
    """Raised when the Gaussian target has zero variance"""

    pass


def _variance(cfg: NetworkConfig, act: ActivationSpec, rule) -> float:
    try:
        return network_variance(cfg, act, rule)
    except ArithmeticError as exc:
        raise DegenerateVarianceError(str(exc)) from exc


def _report(metric: Metric, width: int, sigma_sq: float, breakdown, source, **kwargs):
    return BoundReport.from_constant(
        breakdown.product(),
        width,
        metric=metric,
        sigma_sq=sigma_sq,
        source=source,
        breakdown=breakdown,
        **kwargs,
    )


def unit_slice_bound(
    width: int,
    act: ActivationSpec,
    metric: Union[Metric, str],
    rule: Optional[QuadratureRule] = None,
) -> BoundReport:
    """
    Bound for d = 1, x = 1, sigma_w = 1, sigma_b = 0:
    c_M sqrt(3 (1 + sqrt 2)) ||a + b|Z|^gamma||_{L4}^2 / sqrt(n).
    """

    metric = Metric(metric)
    sigma_sq = _variance(NetworkConfig.unit_slice(width), act, rule)
    envelope = envelope_l4(act.envelope_a, act.envelope_b, act.envelope_gamma, 1.0)

    breakdown = BoundBreakdown(
        metric_constant=metric.constant(sigma_sq),
        envelope_term=envelope**2,
        geometry_term=UNIT_RADICAL,
    )
    return _report(metric, width, sigma_sq, breakdown, "closed-form-unit")


def geometry_radical(gamma: float) -> float:
    """sqrt(Gamma^2 + Gamma^4 (2 + sqrt(3 (1 + 2 Gamma^2 + 3 Gamma^4))))"""

    g2 = gamma * gamma
    g4 = g2 * g2
    return math.sqrt(g2 + g4 * (2.0 + math.sqrt(3.0 * (1.0 + 2.0 * g2 + 3.0 * g4))))


def single_input_bound(
    cfg: NetworkConfig,
    act: ActivationSpec,
    metric: Union[Metric, str],
    rule: Optional[QuadratureRule] = None,
) -> BoundReport:
    """
    Bound for one input x with Gamma = (sigma_w^2 |x|^2 + sigma_b^2)^{1/2}:
    c_M sigma_w^2 radical(Gamma) ||a + b|Gamma Z|^gamma||_{L4}^2 / sqrt(n).

    On the unit slice this is exactly unit_slice_bound.
    """

    if cfg.num_inputs != 1:
        raise ValueError(f"expected a single input, got {cfg.num_inputs}")

    metric = Metric(metric)
    sigma_sq = _variance(cfg, act, rule)
    gamma = float(cfg.gamma[0])
    envelope = envelope_l4(act.envelope_a, act.envelope_b, act.envelope_gamma, gamma)

    breakdown = BoundBreakdown(
        metric_constant=metric.constant(sigma_sq),
        weight_term=cfg.sigma_w**2,
        envelope_term=envelope**2,
        geometry_term=geometry_radical(gamma),
    )
    return _report(metric, cfg.width, sigma_sq, breakdown, "closed-form-single")


def k_tilde(cfg: NetworkConfig, act: ActivationSpec) -> float:
    """
    K~ = {sum_{i,k} (G_i^2 + sqrt(3 (1 + 2 G_i^2 + 3 G_i^4)) G_ik^2 + 2 G_i^2 G_ik)
    ||a + b|G_i Z|^gamma||_{L4}^2 ||a + b|G_k Z|^gamma||_{L4}^2}^{1/2}
    """

    gamma_sq = cfg.gamma_sq
    gamma_cross = cfg.gamma_cross
    norms = [
        envelope_l4(act.envelope_a, act.envelope_b, act.envelope_gamma, math.sqrt(g))
        ** 2
        for g in gamma_sq
    ]

    total = 0.0
    for i, gi2 in enumerate(gamma_sq):
        radical = math.sqrt(3.0 * (1.0 + 2.0 * gi2 + 3.0 * gi2 * gi2))
        for k, gik in enumerate(gamma_cross[i]):
            weight = gi2 + radical * gik * gik + 2.0 * gi2 * gik
            total += weight * norms[i] * norms[k]

    return math.sqrt(total)


def multi_input_bound(
    cfg: NetworkConfig,
    act: ActivationSpec,
    metric: Union[Metric, str] = Metric.W1,
    rule: Optional[QuadratureRule] = None,
) -> BoundReport:
    """
    W1 bound for p inputs: 2 sigma_w^2 K~ (lambda_1(C) / lambda_p(C)) sqrt(p / n).

    Raises:
        MetricNotProvidedError: metric is not W1.
        SingularMatrixError: C is numerically singular.
    """

    metric = Metric(metric)
    if metric != Metric.W1:
        raise MetricNotProvidedError(
            f"the multi-input bound covers W1 only, {metric.value} is not provided"
        )

    covariance = covariance_matrix(cfg, act, rule)
    spectrum = symmetric_eigenvalues(covariance.entries).require_definite()

    breakdown = BoundBreakdown(
        metric_constant=2.0 * math.sqrt(cfg.num_inputs),
        weight_term=cfg.sigma_w**2,
        envelope_term=1.0,
        geometry_term=1.0,
        k_tilde=k_tilde(cfg, act),
        spectrum_ratio=spectrum.condition,
    )
    return _report(
        metric,
        cfg.width,
        float(covariance.entries[0, 0]),
        breakdown,
        "closed-form-multi",
        spectrum=(spectrum.lambda_max, spectrum.lambda_min),
    )


def closed_form_bound(
    cfg: NetworkConfig,
    act: ActivationSpec,
    metric: Union[Metric, str],
    rule: Optional[QuadratureRule] = None,
) -> BoundReport:
    """Picks the sharpest closed form that applies to cfg."""

    if cfg.num_inputs > 1:
        return multi_input_bound(cfg, act, metric, rule)

    if cfg.is_unit_slice():
        return unit_slice_bound(cfg.width, act, metric, rule)

    return single_input_bound(cfg, act, metric, rule)
