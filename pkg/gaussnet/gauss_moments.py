"""
Gaussian expectations used by the bounds.

E[g(Z)] for Z ~ N(0, 1) is computed with Gauss-Hermite quadrature after the
substitution z = sqrt(2) t, i.e. E[g(Z)] = pi^{-1/2} sum_i w_i g(sqrt(2) t_i).
Absolute moments use the closed form instead, since |z|^p kinks at zero.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from loguru import logger
from scipy.special import gammaln, roots_hermite

from gaussnet.activation import triple
from gaussnet.model import ActivationSpec, NetworkConfig

DEFAULT_ORDER = 200
MIN_ORDER = 20
MAX_ORDER = 3200
# Tensor rules hold order^2 nodes
MAX_ORDER_2D = 1600
CONVERGENCE_RTOL = 1e-8
PERFECT_CORRELATION = 1.0 - 1e-12


class QuadratureOrderError(ValueError):
    """Raised when a quadrature rule is below the accuracy floor"""

    pass


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    A Gauss-Hermite rule in the physicists' convention.

    Nodes with weights that underflow to zero are dropped, they contribute
    nothing to any sum.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    std_nodes: np.ndarray = field(init=False, repr=False)
    std_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        # Standard normal form: E[g(Z)] = sum std_weights * g(std_nodes)
        object.__setattr__(self, "std_nodes", math.sqrt(2.0) * self.nodes)
        object.__setattr__(self, "std_weights", self.weights / math.sqrt(math.pi))

    @classmethod
    def gauss_hermite(cls, order: int = DEFAULT_ORDER) -> "QuadratureRule":
        return _hermite_rule(order)

    def refined(self) -> "QuadratureRule":
        return _hermite_rule(2 * self.order)

    def expect(self, func: Callable[[np.ndarray], np.ndarray], scale: float = 1.0):
        """E[func(scale * Z)] for Z ~ N(0, 1)."""

        values = np.broadcast_to(func(scale * self.std_nodes), self.std_nodes.shape)
        return float(np.dot(self.std_weights, values))

    def expect_2d(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        """E[func(Z1, Z2)] for independent standard normals, tensorized."""

        z1, z2 = np.meshgrid(self.std_nodes, self.std_nodes, indexing="ij")
        values = np.broadcast_to(func(z1, z2), z1.shape)
        return float(self.std_weights @ values @ self.std_weights)


@lru_cache(maxsize=16)
def _hermite_rule(order: int) -> QuadratureRule:
    if order < 1:
        raise QuadratureOrderError(f"quadrature order must be positive, got {order}")

    nodes, weights = roots_hermite(order)
    keep = weights > 0
    nodes = nodes[keep]
    weights = weights[keep]
    nodes.setflags(write=False)
    weights.setflags(write=False)

    return QuadratureRule(nodes=nodes, weights=weights, order=order)


def abs_moment(p: float) -> float:
    """E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi) for Z ~ N(0, 1)."""

    if p < 0:
        raise ValueError(f"absolute moment order must be nonnegative, got {p}")

    if p == 0:
        return 1.0

    log_moment = 0.5 * p * math.log(2.0) + gammaln(0.5 * (p + 1.0))
    return float(math.exp(log_moment - 0.5 * math.log(math.pi)))


def envelope_l4(a: float, b: float, gamma: float, scale: float = 1.0) -> float:
    """
    ||a + b|scale Z|^gamma||_{L^4}, expanded binomially over the closed-form
    absolute moments.
    """

    if min(a, b, gamma) < 0:
        raise ValueError("envelope parameters a, b, gamma must be nonnegative")

    if not scale > 0:
        raise ValueError(f"envelope scale must be positive, got {scale}")

    fourth = sum(
        math.comb(4, k)
        * a ** (4 - k)
        * b**k
        * scale ** (k * gamma)
        * abs_moment(k * gamma)
        for k in range(5)
    )
    return fourth**0.25


def _check_rule(rule: Optional[QuadratureRule]) -> QuadratureRule:
    if rule is None:
        return QuadratureRule.gauss_hermite()

    if rule.order < MIN_ORDER:
        raise QuadratureOrderError(
            f"quadrature order {rule.order} is below the floor of {MIN_ORDER}"
        )

    return rule


def _doubled_until_stable(
    evaluate: Callable[[QuadratureRule], float],
    rule: QuadratureRule,
    max_order: int = MAX_ORDER,
) -> float:
    """Doubles the rule until two consecutive orders agree to CONVERGENCE_RTOL."""

    current = evaluate(rule)
    while rule.order < max_order:
        finer_rule = rule.refined()
        finer = evaluate(finer_rule)
        if math.isclose(current, finer, rel_tol=CONVERGENCE_RTOL, abs_tol=1e-300):
            return finer

        logger.debug(
            f"Quadrature escalated from order {rule.order} to {finer_rule.order} "
            f"({current!r} vs {finer!r})"
        )
        rule, current = finer_rule, finer

    logger.warning(
        f"Quadrature did not converge below order {max_order}, "
        f"using the order {rule.order} value"
    )
    return current


def converged_expectation(
    func: Callable[[np.ndarray], np.ndarray],
    rule: QuadratureRule,
    scale: float = 1.0,
) -> float:
    """E[func(scale Z)] with the order doubled until it stops moving."""

    return _doubled_until_stable(lambda r: r.expect(func, scale), rule)


def _variance_at(
    gamma: float, sigma_w: float, sigma_b: float, tau, rule: QuadratureRule
) -> float:
    second_moment = converged_expectation(lambda y: tau(y) ** 2, rule, gamma)
    return sigma_w**2 * second_moment + sigma_b**2


def network_variance(
    cfg: NetworkConfig,
    act: ActivationSpec,
    rule: Optional[QuadratureRule] = None,
) -> float:
    """sigma^2 = sigma_w^2 E[tau^2(Gamma Z)] + sigma_b^2 for a single input."""

    rule = _check_rule(rule)
    if cfg.num_inputs != 1:
        raise ValueError(
            f"network_variance needs exactly one input, got {cfg.num_inputs}"
        )

    tau = triple(act).value
    variance = _variance_at(float(cfg.gamma[0]), cfg.sigma_w, cfg.sigma_b, tau, rule)

    if not variance > 0:
        raise ArithmeticError(
            f"network variance is {variance}, the activation vanishes on the "
            "support of Gamma Z"
        )

    return variance


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Output covariance C of a p-input network, with its geometry constants."""

    entries: np.ndarray
    gamma: np.ndarray
    gamma_cross: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _pair_expectation(
    tau,
    gamma_i: float,
    gamma_k: float,
    covariance: float,
    rule: QuadratureRule,
) -> float:
    """
    E[tau(Y_i) tau(Y_k)] for a centered bivariate normal (Y_i, Y_k), with
    the same order doubling as the diagonal.
    """

    rho = covariance / (gamma_i * gamma_k)

    if abs(rho) > PERFECT_CORRELATION:
        # Y_k = sign(rho) (Gamma_k / Gamma_i) Y_i, so a 1-D integral suffices
        sign = math.copysign(1.0, rho)
        return converged_expectation(
            lambda z: tau(gamma_i * z) * tau(sign * gamma_k * z), rule
        )

    # Cholesky substitution (Y_i, Y_k) = L (Z1, Z2)
    rest = math.sqrt(1.0 - rho * rho)

    def integrand(z1, z2):
        return tau(gamma_i * z1) * tau(gamma_k * (rho * z1 + rest * z2))

    return _doubled_until_stable(
        lambda r: r.expect_2d(integrand), rule, MAX_ORDER_2D
    )


def covariance_matrix(
    cfg: NetworkConfig,
    act: ActivationSpec,
    rule: Optional[QuadratureRule] = None,
) -> CovarianceMatrix:
    """
    c_ik = sigma_w^2 E[tau(Y_i) tau(Y_k)] + sigma_b^2 where Y is centered normal
    with covariance sigma_w^2 <x_i, x_k> + sigma_b^2.
    """

    rule = _check_rule(rule)
    tau = triple(act).value
    gamma = cfg.gamma
    pre_cov = cfg.pre_activation_covariance
    size = cfg.num_inputs

    entries = np.empty((size, size), dtype=np.float64)
    for i in range(size):
        entries[i, i] = _variance_at(
            float(gamma[i]), cfg.sigma_w, cfg.sigma_b, tau, rule
        )

        for k in range(i + 1, size):
            pair = _pair_expectation(
                tau, float(gamma[i]), float(gamma[k]), float(pre_cov[i, k]), rule
            )
            entries[i, k] = entries[k, i] = cfg.sigma_w**2 * pair + cfg.sigma_b**2

    return CovarianceMatrix(entries=entries, gamma=gamma, gamma_cross=cfg.gamma_cross)
