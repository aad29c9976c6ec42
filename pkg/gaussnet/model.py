"""
Configuration and value types shared by every gaussnet module.

Everything here is immutable once validated.
"""

import json
import math
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from common.config_models import ExperimentOptions


class ConfigValidationError(ValueError):
    """Raised when a network or activation configuration breaks an invariant"""

    pass


class ActivationKind(str, Enum):
    TANH = "tanh"
    CUBIC = "cubic"
    IDENTITY = "identity"
    SOFTPLUS = "softplus-approx"
    SAU = "sau-approx"
    CUSTOM = "custom"


# Families that need the sharpness parameter m
SHARPNESS_KINDS = (ActivationKind.SOFTPLUS, ActivationKind.SAU)


def canonical_envelope(
    kind: ActivationKind, m: Optional[float] = None
) -> Tuple[float, float, float]:
    """
    Returns the shipped (a, b, gamma) envelope for a built-in family.

    softplus-approx: |G| <= log2/m + |x|, |G'| <= 1, |G''| <= m/4.
    sau-approx: |H| <= 1/(m sqrt(2 pi)) + |x|, |H'| <= 1, |H''| <= m/sqrt(2 pi).
    """

    match kind:
        case ActivationKind.TANH:
            return 1.0, 0.0, 0.0
        case ActivationKind.CUBIC:
            return 6.0, 1.0, 3.0
        case ActivationKind.IDENTITY:
            return 1.0, 1.0, 1.0
        case ActivationKind.SOFTPLUS:
            return max(1.0, m / 4.0), 1.0, 1.0
        case ActivationKind.SAU:
            return max(1.0, m / math.sqrt(2.0 * math.pi)), 1.0, 1.0
        case _:
            raise ConfigValidationError(
                "custom activations must supply their own envelope (a, b, gamma)"
            )


class ActivationSpec(BaseModel):
    """An activation function together with its polynomial envelope."""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        populate_by_name=True,
        arbitrary_types_allowed=True,
    )

    kind: ActivationKind = Field(
        description="Activation family: tanh, cubic, identity, softplus-approx, "
        "sau-approx or custom."
    )
    envelope_a: float = Field(alias="a", ge=0, description="Envelope constant a.")
    envelope_b: float = Field(alias="b", ge=0, description="Envelope slope b.")
    envelope_gamma: float = Field(
        alias="gamma", ge=0, description="Envelope exponent gamma."
    )
    m: Optional[float] = Field(
        None,
        ge=1,
        description="Sharpness of the ReLU approximants (softplus-approx, sau-approx).",
    )

    # Vectorized callbacks for custom activations. Never serialized.
    value_fn: Optional[Callable[[Any], Any]] = Field(None, exclude=True)
    d1_fn: Optional[Callable[[Any], Any]] = Field(None, exclude=True)
    d2_fn: Optional[Callable[[Any], Any]] = Field(None, exclude=True)

    @model_validator(mode="before")
    @classmethod
    def fill_canonical_envelope(cls, data: Any):
        """Built-in families may omit their envelope."""

        if not isinstance(data, dict):
            return data

        kind = data.get("kind")
        try:
            kind = ActivationKind(kind)
        except ValueError:
            return data

        if kind == ActivationKind.CUSTOM:
            return data

        keys = (("a", "envelope_a"), ("b", "envelope_b"), ("gamma", "envelope_gamma"))
        if all(alias in data or name in data for alias, name in keys):
            return data

        m = data.get("m")
        if kind in SHARPNESS_KINDS and m is None:
            return data

        defaults = canonical_envelope(kind, m)
        data = dict(data)
        for (alias, name), default in zip(keys, defaults, strict=True):
            if alias not in data and name not in data:
                data[alias] = default

        return data

    @model_validator(mode="after")
    def check_family_parameters(self):
        if self.kind in SHARPNESS_KINDS and self.m is None:
            raise ValueError(f"activation '{self.kind.value}' requires m >= 1")

        if self.kind not in SHARPNESS_KINDS and self.m is not None:
            raise ValueError(f"activation '{self.kind.value}' does not take m")

        return self

    @classmethod
    def builtin(cls, kind: Union[str, ActivationKind], m: Optional[float] = None):
        """Creates a built-in activation with its canonical envelope."""

        return cls.model_validate({"kind": ActivationKind(kind), "m": m})

    @classmethod
    def custom(
        cls,
        value_fn: Callable,
        d1_fn: Optional[Callable],
        d2_fn: Optional[Callable],
        a: float,
        b: float,
        gamma: float,
    ):
        """Creates a custom activation from vectorized callbacks."""

        return cls(
            kind=ActivationKind.CUSTOM,
            a=a,
            b=b,
            gamma=gamma,
            value_fn=value_fn,
            d1_fn=d1_fn,
            d2_fn=d2_fn,
        )

    def envelope(self, x):
        """a + b|x|^gamma, elementwise."""

        return self.envelope_a + self.envelope_b * np.abs(x) ** self.envelope_gamma

    def with_envelope(self, a: float, b: float, gamma: float) -> "ActivationSpec":
        return self.model_copy(
            update={"envelope_a": a, "envelope_b": b, "envelope_gamma": gamma}
        )


class NetworkConfig(BaseModel):
    """Shallow Gaussian network hyperparameters and its evaluation inputs."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    input_dim: int = Field(alias="d", ge=1, description="Input dimension d.")
    width: int = Field(alias="n", ge=1, description="Hidden layer width n.")
    sigma_w: float = Field(gt=0, description="Weight scale sigma_w.")
    sigma_b: float = Field(0.0, ge=0, description="Bias scale sigma_b.")
    inputs: List[List[float]] = Field(
        min_length=1, description="Evaluation inputs x_1..x_p, each of length d."
    )

    @field_validator("inputs")
    @classmethod
    def inputs_are_finite(cls, inputs: List[List[float]]):
        for index, vector in enumerate(inputs):
            if not all(math.isfinite(value) for value in vector):
                raise ValueError(f"input {index} has non-finite entries")

        return inputs

    @model_validator(mode="after")
    def check_geometry(self):
        for index, vector in enumerate(self.inputs):
            if len(vector) != self.input_dim:
                raise ValueError(
                    f"dimension mismatch: input {index} has length {len(vector)}, "
                    f"expected d = {self.input_dim}"
                )

        degenerate = [i for i, g in enumerate(self.gamma_sq) if not g > 0]
        if degenerate:
            raise ValueError(
                f"degenerate Gamma: Gamma_i^2 = sigma_w^2 |x_i|^2 + sigma_b^2 "
                f"is zero for inputs {degenerate}"
            )

        return self

    @classmethod
    def unit_slice(cls, width: int) -> "NetworkConfig":
        """d = 1, x = 1, sigma_w = 1, sigma_b = 0."""

        return cls(d=1, n=width, sigma_w=1.0, sigma_b=0.0, inputs=[[1.0]])

    @property
    def num_inputs(self) -> int:
        return len(self.inputs)

    @property
    def input_matrix(self) -> np.ndarray:
        """Inputs as a p x d array."""

        return np.asarray(self.inputs, dtype=np.float64)

    @property
    def gamma_sq(self) -> np.ndarray:
        """Gamma_i^2 = sigma_w^2 sum_j x_ij^2 + sigma_b^2."""

        x = self.input_matrix
        return self.sigma_w**2 * np.sum(x * x, axis=1) + self.sigma_b**2

    @property
    def gamma(self) -> np.ndarray:
        return np.sqrt(self.gamma_sq)

    @property
    def gamma_cross(self) -> np.ndarray:
        """Gamma_ik = sigma_w^2 sum_j |x_ij x_kj| + sigma_b^2."""

        x = np.abs(self.input_matrix)
        return self.sigma_w**2 * (x @ x.T) + self.sigma_b**2

    @property
    def pre_activation_covariance(self) -> np.ndarray:
        """Covariance sigma_w^2 <x_i, x_k> + sigma_b^2 of the hidden pre-activations."""

        x = self.input_matrix
        return self.sigma_w**2 * (x @ x.T) + self.sigma_b**2

    def with_width(self, width: int) -> "NetworkConfig":
        return self.model_validate({**self.model_dump(), "width": width})

    def single(self, index: int = 0) -> "NetworkConfig":
        """The same network restricted to one input."""

        return self.model_validate(
            {**self.model_dump(), "inputs": [self.inputs[index]]}
        )

    def is_unit_slice(self) -> bool:
        return (
            self.input_dim == 1
            and self.num_inputs == 1
            and self.sigma_w == 1.0
            and self.sigma_b == 0.0
            and abs(self.inputs[0][0]) == 1.0
        )


class Metric(str, Enum):
    W1 = "W1"
    TV = "TV"
    KS = "KS"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            for member in cls:
                if member.value.lower() == value.lower():
                    return member

        return None

    def constant(self, sigma_sq: float) -> float:
        """Metric constant c_M for a Gaussian target of variance sigma_sq."""

        if not sigma_sq > 0:
            raise ValueError(f"sigma^2 must be positive, got {sigma_sq}")

        match self:
            case Metric.TV:
                return 4.0 / sigma_sq
            case Metric.KS:
                return 2.0 / sigma_sq
            case Metric.W1:
                return math.sqrt(8.0 / (sigma_sq * math.pi))


class BoundBreakdown(BaseModel):
    """Factors whose product over sqrt(n) gives a closed-form bound."""

    model_config = ConfigDict(frozen=True)

    metric_constant: float = Field(ge=0)
    weight_term: float = Field(1.0, ge=0)
    envelope_term: float = Field(ge=0)
    geometry_term: float = Field(ge=0)
    k_tilde: Optional[float] = None
    spectrum_ratio: Optional[float] = None

    def product(self) -> float:
        value = (
            self.metric_constant
            * self.weight_term
            * self.envelope_term
            * self.geometry_term
        )
        if self.k_tilde is not None:
            value *= self.k_tilde

        if self.spectrum_ratio is not None:
            value *= self.spectrum_ratio

        return value


class BoundReport(BaseModel):
    """A bound on d_M(F, N) at a given width."""

    model_config = ConfigDict(frozen=True)

    metric: Metric
    width: int = Field(ge=1)
    value: float = Field(ge=0)
    sigma_sq: float = Field(
        gt=0,
        description="Variance of the Gaussian target, c_11 for multi-input reports.",
    )
    constant: float = Field(ge=0, description="The n-free factor: value * sqrt(n).")
    source: str = Field(description="Which estimate produced the value.")
    spectrum: Optional[Tuple[float, float]] = Field(
        None, description="(lambda_1(C), lambda_p(C)) for multi-input reports."
    )
    breakdown: Optional[BoundBreakdown] = None
    standard_error: Optional[float] = Field(
        None, description="Monte-Carlo standard error of value."
    )
    inner_sum: Optional[float] = Field(
        None, description="Estimated double sum under the square root."
    )

    @model_validator(mode="after")
    def value_matches_constant(self):
        expected = self.constant / math.sqrt(self.width)
        if not math.isclose(self.value, expected, rel_tol=1e-9, abs_tol=1e-300):
            raise ValueError(
                f"value {self.value} != constant / sqrt(width) = {expected}"
            )

        return self

    @classmethod
    def from_constant(cls, constant: float, width: int, **kwargs) -> "BoundReport":
        value = constant / math.sqrt(width)
        return cls(constant=constant, width=width, value=value, **kwargs)


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error.get("loc", ()))
        message = error.get("msg", "invalid value").removeprefix("Value error, ")
        parts.append(f"{location}: {message}" if location else message)

    return "; ".join(parts)


def validate_config(
    cfg: Union[NetworkConfig, Dict[str, Any]],
    act: Union[ActivationSpec, Dict[str, Any]],
) -> Tuple[NetworkConfig, ActivationSpec]:
    """
    Validates a network/activation pair.

    Accepts raw dicts or already-built models, and raises ConfigValidationError
    naming the violated invariant.
    """

    try:
        if not isinstance(cfg, NetworkConfig):
            cfg = NetworkConfig.model_validate(cfg)

        if not isinstance(act, ActivationSpec):
            act = ActivationSpec.model_validate(act)
    except ValidationError as exc:
        raise ConfigValidationError(_format_validation_error(exc)) from exc

    if act.kind == ActivationKind.CUSTOM:
        missing = [
            name
            for name in ("value_fn", "d1_fn", "d2_fn")
            if getattr(act, name) is None
        ]
        if missing:
            raise ConfigValidationError(
                f"custom activation is missing callbacks: {', '.join(missing)}"
            )

    return cfg, act


class _ConfigDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    activation: ActivationSpec
    network: NetworkConfig
    experiment: Optional[ExperimentOptions] = None


def dump_config(
    cfg: NetworkConfig,
    act: ActivationSpec,
    experiment: Optional[Dict[str, Any]] = None,
) -> str:
    """Serializes a configuration to its JSON document form."""

    document = {
        "activation": act.model_dump(by_alias=True, exclude_none=True),
        "network": cfg.model_dump(by_alias=True),
    }
    if experiment is not None:
        document["experiment"] = experiment

    return json.dumps(document, indent=2)


def parse_config(
    text: str,
) -> Tuple[NetworkConfig, ActivationSpec, Optional[Dict[str, Any]]]:
    """Parses a JSON configuration document. Unknown keys are rejected."""

    try:
        document = _ConfigDocument.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigValidationError(_format_validation_error(exc)) from exc

    experiment = None
    if document.experiment is not None:
        experiment = document.experiment.model_dump(exclude_unset=True)

    return document.network, document.activation, experiment
