"""Eigenvalues of the small symmetric covariance matrices via cyclic Jacobi."""

import math
from typing import List

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

SYMMETRY_RTOL = 1e-10
OFF_DIAGONAL_RTOL = 1e-14
SINGULAR_RTOL = 1e-12
MAX_SWEEPS = 64


class AsymmetricMatrixError(ValueError):
    """Raised when a matrix is not symmetric to the accepted tolerance"""

    pass


class SingularMatrixError(ArithmeticError):
    """Raised when a covariance matrix is numerically singular"""

    pass


class SpectrumSummary(BaseModel):
    """Sorted spectrum of a symmetric matrix."""

    model_config = ConfigDict(frozen=True)

    eigenvalues: List[float] = Field(description="Sorted in descending order.")
    lambda_max: float
    lambda_min: float
    condition: float = Field(description="lambda_max / lambda_min, inf if singular.")
    singular: bool = Field(
        False,
        description="lambda_min <= 1e-12 lambda_max, the matrix has no usable inverse.",
    )
    sweeps: int = 0

    @property
    def spectral_norm(self) -> float:
        """||C||_2 for a positive semidefinite C."""

        return self.lambda_max

    @property
    def inverse_norm(self) -> float:
        """||C^-1||_2 for a positive definite C."""

        if self.singular:
            raise SingularMatrixError("matrix is numerically singular")

        return 1.0 / self.lambda_min

    def require_definite(self):
        if self.singular:
            raise SingularMatrixError(
                f"covariance matrix is numerically singular: lambda_p = "
                f"{self.lambda_min!r}, lambda_1 = {self.lambda_max!r}"
            )

        return self


def _off_diagonal_norm(matrix: np.ndarray) -> float:
    off = matrix - np.diag(np.diag(matrix))
    return float(np.sqrt(np.sum(off * off)))


def _rotate(matrix: np.ndarray, p: int, q: int):
    """Zeroes matrix[p, q] with one Jacobi rotation, in place."""

    apq = matrix[p, q]
    if apq == 0.0:
        return

    theta = (matrix[q, q] - matrix[p, p]) / (2.0 * apq)
    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    col_p = matrix[:, p].copy()
    col_q = matrix[:, q].copy()
    matrix[:, p] = c * col_p - s * col_q
    matrix[:, q] = s * col_p + c * col_q

    row_p = matrix[p, :].copy()
    row_q = matrix[q, :].copy()
    matrix[p, :] = c * row_p - s * row_q
    matrix[q, :] = s * row_p + c * row_q

    # Exact values for the annihilated pair
    matrix[p, p] = col_p[p] - t * apq
    matrix[q, q] = col_q[q] + t * apq
    matrix[p, q] = matrix[q, p] = 0.0


def symmetric_eigenvalues(matrix) -> SpectrumSummary:
    """
    Computes all eigenvalues of a small symmetric matrix.

    Cyclic Jacobi sweeps run until the off-diagonal Frobenius mass falls
    below 1e-14 times the Frobenius norm of the input.

    Args:
        matrix: A p x p symmetric array.

    Raises:
        AsymmetricMatrixError: The input is not square, or not symmetric to
            1e-10 relative.
    """

    work = np.array(matrix, dtype=np.float64, copy=True)
    if work.ndim != 2 or work.shape[0] != work.shape[1] or work.shape[0] == 0:
        raise AsymmetricMatrixError(
            f"expected a nonempty square matrix, got {work.shape}"
        )

    if not np.all(np.isfinite(work)):
        raise ValueError("matrix has non-finite entries")

    scale = float(np.linalg.norm(work))
    asymmetry = float(np.max(np.abs(work - work.T)))
    if asymmetry > SYMMETRY_RTOL * max(scale, np.finfo(np.float64).tiny):
        raise AsymmetricMatrixError(
            f"matrix is not symmetric: max |c_ik - c_ki| = {asymmetry!r}"
        )

    work = 0.5 * (work + work.T)
    size = work.shape[0]
    target = OFF_DIAGONAL_RTOL * scale

    sweeps = 0
    while _off_diagonal_norm(work) > target:
        if sweeps >= MAX_SWEEPS:
            logger.warning(
                f"Jacobi stopped after {MAX_SWEEPS} sweeps with off-diagonal "
                f"mass {_off_diagonal_norm(work)!r}"
            )
            break

        for p in range(size - 1):
            for q in range(p + 1, size):
                _rotate(work, p, q)

        sweeps += 1

    eigenvalues = sorted(np.diag(work).tolist(), reverse=True)
    lambda_max = eigenvalues[0]
    lambda_min = eigenvalues[-1]

    singular = lambda_min <= SINGULAR_RTOL * abs(lambda_max)
    if singular:
        logger.debug(
            f"Spectrum flagged singular: lambda_p = {lambda_min!r}, "
            f"lambda_1 = {lambda_max!r}"
        )

    return SpectrumSummary(
        eigenvalues=eigenvalues,
        lambda_max=lambda_max,
        lambda_min=lambda_min,
        condition=math.inf if singular else lambda_max / lambda_min,
        singular=singular,
        sweeps=sweeps,
    )
