"""
Activation functions and their first two derivatives.

Every callable here is vectorized over numpy arrays. The ReLU approximants
follow the softplus sequence G(m, x) = log(1 + e^{mx}) / m and the SAU
sequence H(m, x) = exp(-m^2 x^2 / 2) / (m sqrt(2 pi)) + x/2 + (x/2) erf(mx/sqrt 2).
"""

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import erf, expit

from gaussnet.model import ActivationKind, ActivationSpec

SQRT_2PI = math.sqrt(2.0 * math.pi)


class MissingDerivativeError(ValueError):
    """Raised when a custom activation lacks a callback for a requested order"""

    pass


@dataclass(frozen=True)
class ActivationTriple:
    """tau, tau' and tau'' of one activation."""

    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]

    def order(self, order: int) -> Callable[[np.ndarray], np.ndarray]:
        match order:
            case 0:
                return self.value
            case 1:
                return self.d1
            case 2:
                return self.d2
            case _:
                raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")


def _tanh_d1(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _tanh_d2(x):
    t = np.tanh(x)
    return -2.0 * t * (1.0 - t * t)


def _cubic(x):
    return x * x * x


def _cubic_d1(x):
    return 3.0 * x * x


def _cubic_d2(x):
    return 6.0 * x


def _identity(x):
    return x * 1.0


def _identity_d1(x):
    return np.ones_like(np.asarray(x, dtype=np.float64))


def _identity_d2(x):
    return np.zeros_like(np.asarray(x, dtype=np.float64))


def _softplus(x, m: float):
    # logaddexp keeps large m*x from overflowing
    return np.logaddexp(0.0, m * np.asarray(x, dtype=np.float64)) / m


def _softplus_d1(x, m: float):
    return expit(m * np.asarray(x, dtype=np.float64))


def _softplus_d2(x, m: float):
    mx = m * np.asarray(x, dtype=np.float64)
    return m * expit(mx) * expit(-mx)


def _sau(x, m: float):
    x = np.asarray(x, dtype=np.float64)
    mx = m * x
    return (
        np.exp(-0.5 * mx * mx) / (m * SQRT_2PI)
        + 0.5 * x
        + 0.5 * x * erf(mx / math.sqrt(2.0))
    )


def _sau_d1(x, m: float):
    mx = m * np.asarray(x, dtype=np.float64)
    return 0.5 * (1.0 + erf(mx / math.sqrt(2.0)))


def _sau_d2(x, m: float):
    # Gaussian kernel, exact
    mx = m * np.asarray(x, dtype=np.float64)
    return m * np.exp(-0.5 * mx * mx) / SQRT_2PI


def _missing(name: str, order: int):
    def raiser(_x):
        raise MissingDerivativeError(
            f"custom activation has no callback '{name}' for order {order}"
        )

    return raiser


def triple(act: ActivationSpec) -> ActivationTriple:
    """Resolves the three callables of an activation."""

    match act.kind:
        case ActivationKind.TANH:
            return ActivationTriple(np.tanh, _tanh_d1, _tanh_d2)
        case ActivationKind.CUBIC:
            return ActivationTriple(_cubic, _cubic_d1, _cubic_d2)
        case ActivationKind.IDENTITY:
            return ActivationTriple(_identity, _identity_d1, _identity_d2)
        case ActivationKind.SOFTPLUS:
            return ActivationTriple(
                partial(_softplus, m=act.m),
                partial(_softplus_d1, m=act.m),
                partial(_softplus_d2, m=act.m),
            )
        case ActivationKind.SAU:
            return ActivationTriple(
                partial(_sau, m=act.m),
                partial(_sau_d1, m=act.m),
                partial(_sau_d2, m=act.m),
            )
        case ActivationKind.CUSTOM:
            callbacks = [
                getattr(act, name) or _missing(name, order)
                for order, name in enumerate(("value_fn", "d1_fn", "d2_fn"))
            ]
            return ActivationTriple(*callbacks)


def evaluate(act: ActivationSpec, order: int, x):
    """
    Evaluates tau^(order) at x.

    Args:
        act: The activation.
        order: 0, 1 or 2.
        x: A float or an array of floats.

    Returns:
        A float for scalar x, an array otherwise.
    """

    func = triple(act).order(order)
    result = func(np.asarray(x, dtype=np.float64))

    if np.ndim(x) == 0:
        return float(result)

    return np.asarray(result, dtype=np.float64)


class EnvelopeReport(BaseModel):
    """Outcome of checking |tau^(l)(x)| <= a + b|x|^gamma on a grid."""

    holds: bool
    worst_excess: float = Field(
        description="max over grid and orders of |tau^(l)(x)| - (a + b|x|^gamma)"
    )
    worst_x: float
    worst_order: int


def envelope_check(
    act: ActivationSpec, grid: Optional[Sequence[float]] = None
) -> EnvelopeReport:
    """Checks the polynomial envelope against tau, tau' and tau'' on a grid."""

    if grid is None:
        grid = np.linspace(-10.0, 10.0, 10_000)

    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("envelope grid must be nonempty")

    funcs = triple(act)
    bound = act.envelope(grid)

    # rows are derivative orders
    excess = np.stack(
        [np.abs(funcs.order(order)(grid)) - bound for order in range(3)]
    )
    worst_order, worst_index = np.unravel_index(np.argmax(excess), excess.shape)
    worst_excess = float(excess[worst_order, worst_index])

    return EnvelopeReport(
        holds=worst_excess <= 0.0,
        worst_excess=worst_excess,
        worst_x=float(grid[worst_index]),
        worst_order=int(worst_order),
    )
