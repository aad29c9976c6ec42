"""
Gradients, Hessians and Monte-Carlo second-order Poincare estimates.

The single-input network is differentiated in its collapsed form
F = n^{-1/2} sigma_w sum_j w_j tau(Gamma Y_j) + sigma_b b with parameters
ordered (w_1..w_n, Y_1..Y_n, b). Only the per-neuron 2x2 (w_j, Y_j) Hessian
blocks are nonzero, so every double sum over parameter pairs reduces to a
sum over neurons.
"""

import asyncio
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, List, Optional, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel

from common.concurrency import gather_in_threads
from gaussnet.activation import triple
from gaussnet.gauss_moments import (
    QuadratureRule,
    covariance_matrix,
    network_variance,
)
from gaussnet.model import (
    ActivationSpec,
    BoundReport,
    Metric,
    NetworkConfig,
)
from gaussnet.sampler import SeedSpec
from gaussnet.spectra import symmetric_eigenvalues

DEFAULT_MC_SAMPLES = 100_000
DEFAULT_CHUNK_ROWS = 10_000
MIN_CHUNKS = 10

# Upper bound on floats held by one chunk of per-neuron terms
CHUNK_ELEMENTS = 1 << 21

CHATTERJEE_CONSTANT = 2.0 * math.sqrt(5.0)


class PoincareEstimateError(ArithmeticError):
    """Raised when a Monte-Carlo moment estimate is not finite"""

    def __init__(self, term: str, message: str = None):
        self.term = term
        super().__init__(
            message
            or f"Monte-Carlo estimate of '{term}' is not finite, the activation "
            "grows too fast for this sample size"
        )


@dataclass(frozen=True, eq=False)
class ParameterPoint:
    """
    A realization (w, Y, b) of the collapsed parameters.

    w and y have shape (..., n), b has shape (...).
    """

    w: np.ndarray
    y: np.ndarray
    b: Union[float, np.ndarray] = 0.0

    @classmethod
    def draw(cls, rng: np.random.Generator, width: int, rows: int) -> "ParameterPoint":
        w = rng.standard_normal((rows, width))
        y = rng.standard_normal((rows, width))
        b = rng.standard_normal(rows)
        return cls(w=w, y=y, b=b)

    @property
    def width(self) -> int:
        return self.w.shape[-1]


@dataclass(frozen=True, eq=False)
class DerivativeBundle:
    """
    Gradient and block-diagonal Hessian of the network in its parameters.

    gradient is laid out (w_1..w_n, Y_1..Y_n, b). The Hessian is stored by
    its only nonzero entries: hess_wy[j] = d2F/dw_j dY_j and
    hess_yy[j] = d2F/dY_j^2.
    """

    gradient: np.ndarray
    hess_wy: np.ndarray
    hess_yy: np.ndarray

    @property
    def width(self) -> int:
        return self.hess_wy.shape[-1]

    @property
    def grad_w(self) -> np.ndarray:
        return self.gradient[..., : self.width]

    @property
    def grad_y(self) -> np.ndarray:
        return self.gradient[..., self.width : 2 * self.width]

    @property
    def grad_b(self) -> np.ndarray:
        return self.gradient[..., 2 * self.width]

    def dense_hessian(self) -> np.ndarray:
        """The full (2n+1) x (2n+1) Hessian, batched over leading axes."""

        n = self.width
        batch = self.hess_wy.shape[:-1]
        hessian = np.zeros(batch + (2 * n + 1, 2 * n + 1), dtype=np.float64)

        idx = np.arange(n)
        hessian[..., idx, n + idx] = self.hess_wy
        hessian[..., n + idx, idx] = self.hess_wy
        hessian[..., n + idx, n + idx] = self.hess_yy

        return hessian

    def block_operator_norms(self) -> np.ndarray:
        """Spectral norm of each [[0, h_wy], [h_wy, h_yy]] block."""

        return 0.5 * (
            np.abs(self.hess_yy)
            + np.sqrt(self.hess_yy**2 + 4.0 * self.hess_wy**2)
        )


def _single_gamma(cfg: NetworkConfig) -> float:
    if cfg.num_inputs != 1:
        raise ValueError(
            f"expected a single-input network, got {cfg.num_inputs} inputs"
        )

    return float(cfg.gamma[0])


def collapsed_output(cfg: NetworkConfig, act: ActivationSpec, point: ParameterPoint):
    """F = n^{-1/2} sigma_w sum_j w_j tau(Gamma Y_j) + sigma_b b."""

    gamma = _single_gamma(cfg)
    tau = triple(act).value
    scale = cfg.sigma_w / math.sqrt(point.width)
    hidden = np.broadcast_to(tau(gamma * point.y), point.y.shape)

    return scale * np.sum(point.w * hidden, axis=-1) + cfg.sigma_b * np.asarray(point.b)


def analytic_derivatives(
    cfg: NetworkConfig,
    act: ActivationSpec,
    point: ParameterPoint,
) -> DerivativeBundle:
    """
    Closed-form gradient and Hessian of the collapsed network.

    dF/dw_j = c tau(Gamma Y_j), dF/dY_j = c Gamma w_j tau'(Gamma Y_j),
    d2F/dw_j dY_j = c Gamma tau'(Gamma Y_j),
    d2F/dY_j^2 = c Gamma^2 w_j tau''(Gamma Y_j), dF/db = sigma_b,
    with c = n^{-1/2} sigma_w. Every other entry is zero.
    """

    gamma = _single_gamma(cfg)
    if point.width != cfg.width:
        raise ValueError(f"point has {point.width} neurons, network has {cfg.width}")

    funcs = triple(act)
    c = cfg.sigma_w / math.sqrt(cfg.width)
    pre = gamma * point.y

    t0 = np.broadcast_to(funcs.value(pre), pre.shape)
    t1 = np.broadcast_to(funcs.d1(pre), pre.shape)
    t2 = np.broadcast_to(funcs.d2(pre), pre.shape)

    grad_b = np.full(pre.shape[:-1] + (1,), cfg.sigma_b, dtype=np.float64)
    gradient = np.concatenate([c * t0, c * gamma * point.w * t1, grad_b], axis=-1)

    return DerivativeBundle(
        gradient=gradient,
        hess_wy=c * gamma * t1,
        hess_yy=c * gamma**2 * point.w * t2,
    )


def raw_derivatives(
    cfg: NetworkConfig,
    act: ActivationSpec,
    w: np.ndarray,
    w0: np.ndarray,
) -> DerivativeBundle:
    """
    Derivatives in the raw parameters (w_j, w0_j) of a one-dimensional
    network without bias, F = n^{-1/2} sigma_w sum_j w_j tau(sigma_w w0_j x).

    The second slot of the bundle holds the w0 derivatives. For x > 0 this
    coincides with analytic_derivatives at Y = w0.
    """

    if cfg.input_dim != 1 or cfg.num_inputs != 1 or cfg.sigma_b != 0.0:
        raise ValueError("raw derivatives need d = 1, a single input and sigma_b = 0")

    w = np.asarray(w, dtype=np.float64)
    w0 = np.asarray(w0, dtype=np.float64)
    funcs = triple(act)
    x = cfg.inputs[0][0]
    c = cfg.sigma_w / math.sqrt(cfg.width)
    slope = cfg.sigma_w * x
    pre = slope * w0

    t0 = np.broadcast_to(funcs.value(pre), pre.shape)
    t1 = np.broadcast_to(funcs.d1(pre), pre.shape)
    t2 = np.broadcast_to(funcs.d2(pre), pre.shape)

    grad_b = np.zeros(pre.shape[:-1] + (1,), dtype=np.float64)
    gradient = np.concatenate([c * t0, c * slope * w * t1, grad_b], axis=-1)

    return DerivativeBundle(
        gradient=gradient,
        hess_wy=c * slope * t1,
        hess_yy=c * slope**2 * w * t2,
    )


@dataclass(frozen=True, eq=False)
class BlockDerivatives:
    """
    Gradient and Hessian of w tau(<v, x_i>) in (w, v_1..v_{d+1}), one block
    per input i. Shapes (..., p, d+2) and (..., p, d+2, d+2).
    """

    gradient: np.ndarray
    hessian: np.ndarray


def augmented_inputs(cfg: NetworkConfig) -> np.ndarray:
    """Rows x_i~ = [sigma_w x_i, sigma_b], so <[w0, b0], x_i~> is the pre-activation."""

    x = cfg.sigma_w * cfg.input_matrix
    bias = np.full((cfg.num_inputs, 1), cfg.sigma_b)
    return np.concatenate([x, bias], axis=1)


def multi_block_derivatives(
    cfg: NetworkConfig,
    act: ActivationSpec,
    w: np.ndarray,
    v: np.ndarray,
) -> BlockDerivatives:
    """
    Per-neuron derivatives of the multi-input network.

    Args:
        w: Output weights, shape (...,).
        v: Augmented hidden weights [w0, b0], shape (..., d+1).

    The gradient is (tau(Y_i), w tau'(Y_i) x_i~) and the Hessian is
    [[0, tau'(Y_i) x_i~^T], [tau'(Y_i) x_i~, w tau''(Y_i) x_i~ x_i~^T]].
    """

    funcs = triple(act)
    x_aug = augmented_inputs(cfg)
    w = np.asarray(w, dtype=np.float64)[..., None]
    pre = np.einsum("...s,is->...i", v, x_aug)

    t0 = np.broadcast_to(funcs.value(pre), pre.shape)
    t1 = np.broadcast_to(funcs.d1(pre), pre.shape)
    t2 = np.broadcast_to(funcs.d2(pre), pre.shape)

    dim = cfg.input_dim + 2
    gradient = np.empty(pre.shape + (dim,), dtype=np.float64)
    gradient[..., 0] = t0
    gradient[..., 1:] = (w * t1)[..., None] * x_aug

    hessian = np.zeros(pre.shape + (dim, dim), dtype=np.float64)
    hessian[..., 0, 1:] = t1[..., None] * x_aug
    hessian[..., 1:, 0] = hessian[..., 0, 1:]
    hessian[..., 1:, 1:] = (w * t2)[..., None, None] * (
        x_aug[:, :, None] * x_aug[:, None, :]
    )

    return BlockDerivatives(gradient=gradient, hessian=hessian)


def chunk_sizes(mc_samples: int, max_rows: int) -> List[int]:
    """
    Splits mc_samples into near-equal chunks of at most max_rows.

    At least MIN_CHUNKS chunks are used when there are enough samples, so a
    spread across chunks is available for the standard error.
    """

    if mc_samples < 1:
        raise ValueError(f"Monte-Carlo sample count must be positive, got {mc_samples}")

    count = max(math.ceil(mc_samples / max(1, max_rows)), min(MIN_CHUNKS, mc_samples))
    base, extra = divmod(mc_samples, count)
    return [base + 1 if index < extra else base for index in range(count)]


def _check_finite(term: str, value):
    if not np.all(np.isfinite(value)):
        raise PoincareEstimateError(term)


def _chunk_error(chunk_values: np.ndarray, weights: np.ndarray) -> Optional[float]:
    """Standard error of a weighted mean from the spread across chunks."""

    if len(chunk_values) < 2:
        return None

    mean = np.average(chunk_values, weights=weights)
    spread = np.average((chunk_values - mean) ** 2, weights=weights)
    return float(math.sqrt(spread / (len(chunk_values) - 1)))


@dataclass
class _MomentSums:
    """Running sums of per-term fourth moments over Monte-Carlo draws."""

    terms: dict
    chunk_totals: list
    chunk_sizes: list
    count: int = 0

    @classmethod
    def empty(cls):
        return cls(terms={}, chunk_totals=[], chunk_sizes=[])

    def add(self, chunk: dict, rows: int, combine: Callable[[dict], float]):
        for name, value in chunk.items():
            _check_finite(name, value)
            self.terms[name] = self.terms.get(name, 0.0) + value

        # The chunk's own estimate of the combined sum
        self.chunk_totals.append(combine({k: v / rows for k, v in chunk.items()}))
        self.chunk_sizes.append(rows)
        self.count += rows

    def means(self) -> dict:
        return {name: value / self.count for name, value in self.terms.items()}

    def total_error(self) -> Optional[float]:
        return _chunk_error(np.asarray(self.chunk_totals), np.asarray(self.chunk_sizes))


def _collapsed_terms(bundle: DerivativeBundle) -> dict:
    """Per-neuron fourth-moment terms, summed over the draws of one chunk."""

    hwy2 = bundle.hess_wy**2
    hyy2 = bundle.hess_yy**2
    gw2 = bundle.grad_w**2
    gy2 = bundle.grad_y**2

    return {
        "<H_w, H_w>^2": np.sum(hwy2 * hwy2, axis=0),
        "<H_Y, H_Y>^2": np.sum((hwy2 + hyy2) ** 2, axis=0),
        "<H_w, H_Y>^2": np.sum(hwy2 * hyy2, axis=0),
        "(g_w g_w)^2": np.sum(gw2 * gw2, axis=0),
        "(g_Y g_Y)^2": np.sum(gy2 * gy2, axis=0),
        "(g_w g_Y)^2": np.sum(gw2 * gy2, axis=0),
    }


def _collapsed_sum(means: dict) -> float:
    """Sum over parameter pairs of sqrt(E<H_l,H_m>^2) sqrt(E(g_l g_m)^2)."""

    per_neuron = (
        np.sqrt(means["<H_w, H_w>^2"]) * np.sqrt(means["(g_w g_w)^2"])
        + np.sqrt(means["<H_Y, H_Y>^2"]) * np.sqrt(means["(g_Y g_Y)^2"])
        + 2.0 * np.sqrt(means["<H_w, H_Y>^2"]) * np.sqrt(means["(g_w g_Y)^2"])
    )
    return float(np.sum(per_neuron))


def _chunk_plan(cfg: NetworkConfig, mc_samples: int, max_rows: int):
    """(stream index, rows) per chunk of the collapsed parameter draws."""

    rows_cap = max(1, min(max_rows, CHUNK_ELEMENTS // (2 * cfg.width)))
    return list(enumerate(chunk_sizes(mc_samples, rows_cap)))


def _run_chunks(calls: List[Callable[[], dict]], threads: int) -> List[dict]:
    """Evaluates chunk calls in worker threads, results in chunk order."""

    return asyncio.run(gather_in_threads(calls, threads))


def _collapsed_chunk(
    cfg: NetworkConfig, act: ActivationSpec, seed: SeedSpec, index: int, rows: int
) -> dict:
    point = ParameterPoint.draw(seed.generator(index), cfg.width, rows)
    with np.errstate(over="ignore", invalid="ignore"):
        return _collapsed_terms(analytic_derivatives(cfg, act, point))


def poincare_sum_mc(
    cfg: NetworkConfig,
    act: ActivationSpec,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: SeedSpec = SeedSpec(),
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    threads: int = 1,
):
    """
    Monte-Carlo estimate of the double sum under the square root of the
    one-dimensional second-order Poincare bound, in O(n) per draw.

    Chunks own their stream index, so the estimate does not depend on
    `threads`.

    Returns:
        (estimate, standard error or None)
    """

    plan = _chunk_plan(cfg, mc_samples, chunk_rows)
    calls = [
        partial(_collapsed_chunk, cfg, act, seed, index, rows) for index, rows in plan
    ]

    sums = _MomentSums.empty()
    for (_, rows), chunk in zip(plan, _run_chunks(calls, threads)):
        sums.add(chunk, rows, _collapsed_sum)

    estimate = _collapsed_sum(sums.means())
    _check_finite("sum", estimate)

    return estimate, sums.total_error()


def poincare_sum_dense(
    cfg: NetworkConfig,
    act: ActivationSpec,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: SeedSpec = SeedSpec(),
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
) -> float:
    """
    The same estimate over every (l, m) pair of the dense (2n+1)^2 Hessian.

    Quadratic in n per draw, for small networks only.
    """

    size = 2 * cfg.width + 1
    hessian_sq = np.zeros((size, size))
    gradient_sq = np.zeros((size, size))
    count = 0

    for index, rows in _chunk_plan(cfg, mc_samples, chunk_rows):
        point = ParameterPoint.draw(seed.generator(index), cfg.width, rows)
        bundle = analytic_derivatives(cfg, act, point)
        hessian = bundle.dense_hessian()
        gram = hessian @ np.swapaxes(hessian, -1, -2)
        products = bundle.gradient[:, :, None] * bundle.gradient[:, None, :]

        hessian_sq += np.sum(gram**2, axis=0)
        gradient_sq += np.sum(products**2, axis=0)
        count += rows

    return float(np.sum(np.sqrt(hessian_sq / count) * np.sqrt(gradient_sq / count)))


def poincare_bound_mc(
    cfg: NetworkConfig,
    act: ActivationSpec,
    metric: Union[Metric, str] = Metric.W1,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: SeedSpec = SeedSpec(),
    rule: Optional[QuadratureRule] = None,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    threads: int = 1,
) -> BoundReport:
    """
    Monte-Carlo evaluation of the one-dimensional second-order Poincare bound
    c_M sqrt(sum_{l,m} sqrt(E<H_l, H_m>^2) sqrt(E(g_l g_m)^2)).

    The standard error follows from the spread of per-chunk sums through the
    delta method, SE(bound) = c_M SE(sum) / (2 sqrt(sum)).
    """

    metric = Metric(metric)
    sigma_sq = network_variance(cfg, act, rule)
    constant = metric.constant(sigma_sq)

    inner, inner_error = poincare_sum_mc(
        cfg, act, mc_samples, seed, chunk_rows, threads
    )
    value = constant * math.sqrt(inner)

    standard_error = None
    if inner_error is not None and inner > 0:
        standard_error = constant * inner_error / (2.0 * math.sqrt(inner))

    logger.debug(
        f"Poincare MC ({metric.value}, n={cfg.width}, {mc_samples} draws): "
        f"{value!r} +/- {standard_error!r}"
    )

    return BoundReport.from_constant(
        value * math.sqrt(cfg.width),
        cfg.width,
        metric=metric,
        sigma_sq=sigma_sq,
        source="poincare-mc",
        standard_error=standard_error,
        inner_sum=inner,
    )


def _block_terms(blocks: BlockDerivatives) -> dict:
    """Per-neuron, per-input pair moments summed over the draws of a chunk."""

    hessian = blocks.hessian
    gram = hessian @ hessian
    products = blocks.gradient[..., :, None] * blocks.gradient[..., None, :]

    return {
        "<H_l F_i, H_m F_i>^2": np.sum(gram**2, axis=0),
        "(g_l F_k g_m F_k)^2": np.sum(products**2, axis=0),
    }


def _block_sum_factory(scale: float):
    def combine(means: dict) -> float:
        hess = np.sqrt(means["<H_l F_i, H_m F_i>^2"])
        grad = np.sqrt(means["(g_l F_k g_m F_k)^2"])
        # neurons j, inputs i and k, block entries l and m
        return float(scale * np.einsum("jilm,jklm->", hess, grad))

    return combine


def _block_chunk(
    cfg: NetworkConfig, act: ActivationSpec, seed: SeedSpec, index: int, rows: int
) -> dict:
    rng = seed.generator(index)
    w = rng.standard_normal((rows, cfg.width))
    v = rng.standard_normal((rows, cfg.width, cfg.input_dim + 1))

    with np.errstate(over="ignore", invalid="ignore"):
        return _block_terms(multi_block_derivatives(cfg, act, w, v))


def poincare_bound_multi_mc(
    cfg: NetworkConfig,
    act: ActivationSpec,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: SeedSpec = SeedSpec(),
    rule: Optional[QuadratureRule] = None,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    threads: int = 1,
) -> BoundReport:
    """
    Monte-Carlo evaluation of the p-dimensional second-order Poincare bound
    2 sqrt(p) ||C^-1||_2 ||C||_2 sqrt(sum_{i,k} sum_{l,m} ...), W1 only.

    Each neuron contributes through its (w_j, w0_j, b0_j) block only; the
    output bias has a zero Hessian row and drops out.

    Raises:
        SingularMatrixError: C is numerically singular.
    """

    covariance = covariance_matrix(cfg, act, rule)
    spectrum = symmetric_eigenvalues(covariance.entries).require_definite()

    dim = cfg.input_dim + 2
    per_row = cfg.width * cfg.num_inputs * dim * dim
    rows_cap = max(1, min(chunk_rows, CHUNK_ELEMENTS // per_row))

    plan = list(enumerate(chunk_sizes(mc_samples, rows_cap)))
    calls = [partial(_block_chunk, cfg, act, seed, index, rows) for index, rows in plan]

    combine = _block_sum_factory(cfg.sigma_w**4 / cfg.width**2)
    sums = _MomentSums.empty()
    for (_, rows), chunk in zip(plan, _run_chunks(calls, threads)):
        sums.add(chunk, rows, combine)

    inner = combine(sums.means())
    _check_finite("sum", inner)

    prefactor = 2.0 * math.sqrt(cfg.num_inputs) * spectrum.condition
    value = prefactor * math.sqrt(inner)

    inner_error = sums.total_error()
    standard_error = None
    if inner_error is not None and inner > 0:
        standard_error = prefactor * inner_error / (2.0 * math.sqrt(inner))

    return BoundReport.from_constant(
        value * math.sqrt(cfg.width),
        cfg.width,
        metric=Metric.W1,
        sigma_sq=float(covariance.entries[0, 0]),
        source="poincare-multi-mc",
        spectrum=(spectrum.lambda_max, spectrum.lambda_min),
        standard_error=standard_error,
        inner_sum=inner,
    )


def _chatterjee_chunk(
    cfg: NetworkConfig, act: ActivationSpec, seed: SeedSpec, index: int, rows: int
) -> dict:
    point = ParameterPoint.draw(seed.generator(index), cfg.width, rows)
    with np.errstate(over="ignore", invalid="ignore"):
        bundle = analytic_derivatives(cfg, act, point)
        grad_sq = np.sum(bundle.gradient**2, axis=-1)
        op_norm = np.max(bundle.block_operator_norms(), axis=-1)

        return {
            "|g|^4": float(np.sum(grad_sq**2)),
            "|H|_op^4": float(np.sum(op_norm**4)),
        }


def chatterjee_tv_bound_mc(
    cfg: NetworkConfig,
    act: ActivationSpec,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: SeedSpec = SeedSpec(),
    rule: Optional[QuadratureRule] = None,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    threads: int = 1,
) -> BoundReport:
    """
    First-order second-order Poincare TV bound
    2 sqrt(5) / sigma^2 E[|grad F|^4]^{1/4} E[||Hess F||_op^4]^{1/4}.

    The Hessian is block diagonal, so its operator norm is the largest
    2x2 block norm.
    """

    sigma_sq = network_variance(cfg, act, rule)
    constant = CHATTERJEE_CONSTANT / sigma_sq

    def combine(means: dict) -> float:
        return constant * (means["|g|^4"] * means["|H|_op^4"]) ** 0.25

    plan = _chunk_plan(cfg, mc_samples, chunk_rows)
    calls = [
        partial(_chatterjee_chunk, cfg, act, seed, index, rows) for index, rows in plan
    ]

    sums = _MomentSums.empty()
    for (_, rows), chunk in zip(plan, _run_chunks(calls, threads)):
        sums.add(chunk, rows, combine)

    value = combine(sums.means())
    _check_finite("bound", value)

    return BoundReport.from_constant(
        value * math.sqrt(cfg.width),
        cfg.width,
        metric=Metric.TV,
        sigma_sq=sigma_sq,
        source="chatterjee-mc",
        standard_error=sums.total_error(),
    )


class PoincareCheck(BaseModel):
    """Var[f(N)] against E[f'(N)^2] for N ~ N(0, 1)."""

    variance: float
    energy: float
    variance_error: float
    energy_error: float

    @property
    def holds(self) -> bool:
        """Var[f(N)] <= E[f'(N)^2] up to 3 combined standard errors."""

        slack = 3.0 * math.hypot(self.variance_error, self.energy_error)
        return self.variance <= self.energy + slack


def gaussian_poincare_check(
    f: Callable[[np.ndarray], np.ndarray],
    f_prime: Callable[[np.ndarray], np.ndarray],
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: SeedSpec = SeedSpec(),
) -> PoincareCheck:
    """Monte-Carlo estimates of both sides of Var[f(N)] <= E[f'(N)^2]."""

    if mc_samples < 2:
        raise ValueError("at least two draws are needed for a variance")

    z = seed.generator().standard_normal(mc_samples)
    values = np.broadcast_to(f(z), z.shape)
    slopes = np.broadcast_to(f_prime(z), z.shape)

    centered_sq = (values - values.mean()) ** 2
    energy_terms = slopes**2

    return PoincareCheck(
        variance=float(np.var(values, ddof=1)),
        energy=float(energy_terms.mean()),
        variance_error=float(centered_sq.std(ddof=1) / math.sqrt(mc_samples)),
        energy_error=float(energy_terms.std(ddof=1) / math.sqrt(mc_samples)),
    )
