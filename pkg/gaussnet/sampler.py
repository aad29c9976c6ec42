"""
Seeded draws of the shallow network output and of its Gaussian reference.

Every draw uses fresh N(0, 1) weights w_j, w0_j, b0_j, b and evaluates
F = n^{-1/2} sigma_w sum_j w_j tau(sigma_w <w0_j, x> + sigma_b b0_j) + sigma_b b
at each input. All inputs of one draw share the weight realization.
"""

import math
import pathlib
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from common.utils import stable_hash
from gaussnet.activation import triple
from gaussnet.gauss_moments import CovarianceMatrix
from gaussnet.model import ActivationSpec, NetworkConfig
from gaussnet.spectra import SingularMatrixError, symmetric_eigenvalues

# Upper bound on normals held for one block of draws
BLOCK_ELEMENTS = 1 << 20


class NonFiniteSampleError(ArithmeticError):
    """Raised when a network draw overflows"""

    def __init__(self, draw_index: int, message: str = None):
        self.draw_index = draw_index
        super().__init__(
            message or f"draw {draw_index} produced a non-finite network output"
        )


class SeedSpec(BaseModel):
    """A master seed and a stream index. Equal pairs give equal streams."""

    model_config = ConfigDict(frozen=True)

    master_seed: int = Field(0, ge=0, lt=2**64)
    stream_index: int = Field(0, ge=0)

    def generator(self, *substreams: int) -> np.random.Generator:
        """
        PCG64 generator keyed on (master_seed, stream_index, *substreams).

        Distinct keys give independent streams through SeedSequence spawning.
        """

        sequence = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.stream_index, *substreams)
        )
        return np.random.Generator(np.random.PCG64(sequence))

    def with_stream(self, stream_index: int) -> "SeedSpec":
        return SeedSpec(master_seed=self.master_seed, stream_index=stream_index)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """
    Draws from one stream.

    values has shape (count,) for a single input and (p, count) otherwise.
    """

    values: np.ndarray
    width: int
    config_hash: str

    @property
    def count(self) -> int:
        return self.values.shape[-1]

    @property
    def num_inputs(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[0]

    def row(self, index: int = 0) -> np.ndarray:
        """Draws at one input."""

        if self.values.ndim == 1:
            if index != 0:
                raise IndexError(f"single-input batch has no row {index}")

            return self.values

        return self.values[index]


def network_hash(cfg: NetworkConfig, act: ActivationSpec) -> str:
    payload = {
        "network": cfg.model_dump(mode="json"),
        "activation": act.model_dump(mode="json"),
    }
    if act.value_fn is not None:
        payload["callback"] = getattr(act.value_fn, "__qualname__", repr(act.value_fn))

    return stable_hash(payload)


def _block_size(cfg: NetworkConfig, count: int) -> int:
    per_draw = cfg.width * (cfg.input_dim + 2)
    return max(1, min(count, BLOCK_ELEMENTS // per_draw))


def _draw_block(
    rng: np.random.Generator,
    block: int,
    cfg: NetworkConfig,
    tau,
    x: np.ndarray,
) -> np.ndarray:
    """Returns a (block, p) array of outputs."""

    n = cfg.width
    w0 = rng.standard_normal((block, n, cfg.input_dim))
    b0 = rng.standard_normal((block, n))
    w = rng.standard_normal((block, n))
    b = rng.standard_normal(block)

    pre = cfg.sigma_w * np.einsum("bjd,pd->bjp", w0, x) + cfg.sigma_b * b0[..., None]
    hidden = np.broadcast_to(tau(pre), pre.shape)

    out = (cfg.sigma_w / math.sqrt(n)) * np.einsum("bj,bjp->bp", w, hidden)
    return out + cfg.sigma_b * b[:, None]


def sample_network(
    cfg: NetworkConfig,
    act: ActivationSpec,
    count: int,
    seed: SeedSpec,
) -> SampleBatch:
    """
    Draws count independent network outputs.

    The block layout depends only on (cfg, count), so a given seed always
    yields the same values.

    Raises:
        NonFiniteSampleError: a draw overflowed, carrying its index.
    """

    if count < 1:
        raise ValueError(f"sample count must be positive, got {count}")

    tau = triple(act).value
    x = cfg.input_matrix
    rng = seed.generator()
    block = _block_size(cfg, count)

    out = np.empty((count, cfg.num_inputs), dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, count, block):
            stop = min(start + block, count)
            values = _draw_block(rng, stop - start, cfg, tau, x)

            finite = np.isfinite(values).all(axis=1)
            if not finite.all():
                raise NonFiniteSampleError(start + int(np.argmin(finite)))

            out[start:stop] = values

    values = out[:, 0].copy() if cfg.num_inputs == 1 else np.ascontiguousarray(out.T)
    return SampleBatch(
        values=values, width=cfg.width, config_hash=network_hash(cfg, act)
    )


def sample_reference(
    target: Union[float, CovarianceMatrix, np.ndarray],
    count: int,
    seed: SeedSpec,
) -> SampleBatch:
    """
    Exact draws from N(0, sigma^2) or N(0, C).

    Args:
        target: sigma^2 as a float, or a covariance matrix.
        count: Number of draws.
        seed: Stream to draw from.

    Raises:
        SingularMatrixError: C is numerically singular.
    """

    if count < 1:
        raise ValueError(f"sample count must be positive, got {count}")

    rng = seed.generator()

    if np.ndim(target) == 0 and not isinstance(target, CovarianceMatrix):
        sigma_sq = float(target)
        if not sigma_sq > 0:
            raise ValueError(f"reference variance must be positive, got {sigma_sq}")

        values = math.sqrt(sigma_sq) * rng.standard_normal(count)
        return SampleBatch(
            values=values, width=0, config_hash=stable_hash({"sigma_sq": sigma_sq})
        )

    entries = target.entries if isinstance(target, CovarianceMatrix) else target
    entries = np.asarray(entries, dtype=np.float64)
    symmetric_eigenvalues(entries).require_definite()

    try:
        factor = np.linalg.cholesky(entries)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Cholesky factorization failed: {exc}") from exc

    values = factor @ rng.standard_normal((entries.shape[0], count))
    return SampleBatch(
        values=values,
        width=0,
        config_hash=stable_hash({"covariance": entries.tolist()}),
    )


def dump_samples(batch: SampleBatch, path: Union[str, pathlib.Path]) -> pathlib.Path:
    """
    Writes one draw per line as decimal text.

    Multi-input batches write the p outputs of a draw space-separated.
    """

    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    rows = batch.values if batch.values.ndim == 1 else batch.values.T
    np.savetxt(path, rows, fmt="%.17g")
    logger.info(f"Wrote {batch.count} draws to {path}")

    return path


def empirical_covariance(batch: SampleBatch) -> Tuple[np.ndarray, np.ndarray]:
    """Sample covariance of a multi-input batch and the standard error of each entry."""

    rows = np.atleast_2d(batch.values)
    centered = rows - rows.mean(axis=1, keepdims=True)
    products = centered[:, None, :] * centered[None, :, :]
    cov = products.mean(axis=2)
    stderr = products.std(axis=2, ddof=1) / math.sqrt(rows.shape[1])

    return cov, stderr
