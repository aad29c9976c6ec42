import json
from typing import List, Literal, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    field_validator,
)


class Metadata(BaseModel):
    """metadata model for config options"""

    include_in_config: Optional[bool] = Field(True)


class BaseConfigModel(BaseModel):
    """Base model for config models with added metadata"""

    _metadata: Metadata = PrivateAttr(Metadata())


def _split_commas(value):
    """Accepts "a,b", ["a", "b"] and ["a,b"] alike."""

    if isinstance(value, str):
        value = [value]

    if isinstance(value, list) and all(isinstance(item, str) for item in value):
        return [
            part.strip() for item in value for part in item.split(",") if part.strip()
        ]

    return value


class ConfigOverrideOptions(BaseConfigModel):
    """Model for overriding a provided config file."""

    model_config = ConfigDict(extra="forbid")

    config: Optional[str] = Field(
        None, description=("Path to a JSON or YAML config file.")
    )

    _metadata: Metadata = PrivateAttr(Metadata(include_in_config=False))


class ActivationOptions(BaseConfigModel):
    """Options for the activation function"""

    model_config = ConfigDict(extra="forbid")

    kind: Optional[str] = Field(
        "tanh",
        description=(
            "Activation family (default: tanh).\n"
            "Possible values: tanh, cubic, identity, softplus-approx, sau-approx."
        ),
    )
    a: Optional[float] = Field(
        None,
        description=(
            "Envelope constant a in |tau^(l)(x)| <= a + b|x|^gamma.\n"
            "Built-in families fill in their own envelope when unset."
        ),
    )
    b: Optional[float] = Field(None, description=("Envelope slope b."))
    gamma: Optional[float] = Field(None, description=("Envelope exponent gamma."))
    m: Optional[float] = Field(
        None,
        description=(
            "Sharpness m >= 1 of the ReLU approximants.\n"
            "Required for softplus-approx and sau-approx, rejected otherwise."
        ),
    )


class NetworkOptions(BaseConfigModel):
    """Options for the shallow Gaussian network"""

    model_config = ConfigDict(extra="forbid")

    d: Optional[int] = Field(1, description=("Input dimension (default: 1)."))
    n: Optional[int] = Field(100, description=("Hidden layer width (default: 100)."))
    sigma_w: Optional[float] = Field(
        1.0, description=("Weight scale sigma_w > 0 (default: 1.0).")
    )
    sigma_b: Optional[float] = Field(
        0.0, description=("Bias scale sigma_b >= 0 (default: 0.0).")
    )
    inputs: Optional[List[List[float]]] = Field(
        [[1.0]],
        description=(
            "Evaluation inputs, each a list of d numbers (default: [[1.0]]).\n"
            "More than one input switches to the multi-input bound."
        ),
    )

    @field_validator("inputs", mode="before")
    def parse_inputs(cls, value):
        """Inputs from the environment or the CLI arrive as JSON text."""

        if isinstance(value, str):
            value = json.loads(value)

        if isinstance(value, list) and all(isinstance(item, str) for item in value):
            value = [json.loads(item) for item in value]

            # A single argument may hold the whole matrix
            if len(value) == 1 and value[0] and isinstance(value[0][0], list):
                value = value[0]

        return value


class ExperimentOptions(BaseConfigModel):
    """Options for sweeps and Monte-Carlo runs"""

    model_config = ConfigDict(extra="forbid")

    widths: Optional[str] = Field(
        "k^3:1..16",
        description=(
            'Widths to sweep (default: "k^3:1..16").\n'
            'Either a power range "k^p:low..high" or a list "1,8,27".'
        ),
    )
    reps: Optional[int] = Field(
        500, description=("Replications per width, at least 2 (default: 500).")
    )
    points: Optional[int] = Field(
        5000, description=("Network draws per replication (default: 5000).")
    )
    metrics: Optional[List[Literal["KS", "TV", "W1"]]] = Field(
        ["KS", "TV", "W1"],
        description=("Distances to estimate (default: KS, TV, W1)."),
    )
    seed: Optional[int] = Field(0, description=("Master seed (default: 0)."))
    reference: Optional[Literal["analytic", "two-sample"]] = Field(
        "analytic",
        description=(
            "Gaussian side of the W1 estimate (default: analytic).\n"
            "two-sample draws a Gaussian sample of equal size instead."
        ),
    )
    interplay_check: Optional[bool] = Field(
        True,
        description=(
            "Estimate KS, TV and W1 on every replication (default: True).\n"
            "Checks KS <= TV and KS <= 2 sqrt(W1), at the cost of computing\n"
            "distances that were not asked for."
        ),
    )
    mc_samples: Optional[int] = Field(
        100000,
        description=("Monte-Carlo draws for the Poincare estimates (default: 100000)."),
    )
    out: Optional[str] = Field(
        "results", description=("Output directory (default: results).")
    )
    fast: Optional[bool] = Field(
        False,
        description=("Use the CI budget of 50 replications x 1000 points."),
    )
    svg: Optional[bool] = Field(
        False, description=("Write an SVG chart per metric. Needs matplotlib.")
    )

    @field_validator("metrics", mode="before")
    def metrics_upper(cls, value):
        value = _split_commas(value)
        if isinstance(value, list):
            return [item.upper() if isinstance(item, str) else item for item in value]

        return value


class LoggingOptions(BaseConfigModel):
    """Options for logging"""

    model_config = ConfigDict(extra="forbid")

    log_level: Optional[str] = Field(
        None,
        description=(
            "Minimum log level (default: INFO).\n"
            "The GAUSSNET_LOG_LEVEL variable sets the default."
        ),
    )
    log_to_file: Optional[bool] = Field(
        False, description=("Also write rotated logs under logs/ (default: False).")
    )


class DeveloperOptions(BaseConfigModel):
    """Options for development and experimentation"""

    model_config = ConfigDict(extra="forbid")

    threads: Optional[int] = Field(
        1,
        description=(
            "Worker threads for replications and Monte-Carlo chunks (default: 1).\n"
            "Results do not depend on this value."
        ),
    )
    quadrature_order: Optional[int] = Field(
        200,
        description=(
            "Starting Gauss-Hermite order, at least 20 (default: 200).\n"
            "The order doubles until two consecutive orders agree."
        ),
    )


class GaussNetConfigModel(BaseModel):
    """Base model for a GaussNetConfig."""

    config: Optional[ConfigOverrideOptions] = Field(
        default_factory=ConfigOverrideOptions.model_construct
    )
    activation: Optional[ActivationOptions] = Field(
        default_factory=ActivationOptions.model_construct
    )
    network: Optional[NetworkOptions] = Field(
        default_factory=NetworkOptions.model_construct
    )
    experiment: Optional[ExperimentOptions] = Field(
        default_factory=ExperimentOptions.model_construct
    )
    logging: Optional[LoggingOptions] = Field(
        default_factory=LoggingOptions.model_construct
    )
    developer: Optional[DeveloperOptions] = Field(
        default_factory=DeveloperOptions.model_construct
    )

    model_config = ConfigDict(validate_assignment=True, extra="forbid")
