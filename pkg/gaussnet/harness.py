"""
Width sweeps comparing empirical distances against the closed-form bounds.

For every width and replication r, points_per_replication network outputs
are drawn on stream r, each requested distance to N(0, sigma^2) is
estimated, and the replications of one width are summarized by their mean
and nearest-rank 2.5/97.5 percentiles.
"""

import asyncio
import math
import pathlib
import re
from enum import Enum
from functools import partial
from importlib.metadata import PackageNotFoundError, version as package_version
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.stats import linregress

from common.concurrency import gather_in_threads
from common.logger import get_loading_progress_bar
from common.utils import stable_hash
from gaussnet.bounds import closed_form_bound, unit_slice_bound
from gaussnet.distances import (
    distance_to_gaussian,
    interplay_report,
    two_sample_w1,
    MIN_TV_SAMPLE,
)
from gaussnet.gauss_moments import QuadratureRule, network_variance
from gaussnet.model import (
    SHARPNESS_KINDS,
    ActivationKind,
    ActivationSpec,
    Metric,
    NetworkConfig,
)
from gaussnet.sampler import SeedSpec, network_hash, sample_network, sample_reference

CSV_COLUMNS = ["width", "metric", "mean", "p2.5", "p97.5", "bound"]
FAST_PROFILE = {"replications": 50, "points_per_replication": 1000}
DEFAULT_GROWTH_SHARPNESS = [1.0, 2.0, 4.0, 8.0, 16.0]


class ReplicationError(RuntimeError):
    """Raised when one replication of a sweep, or their summary, fails"""

    def __init__(self, width: int, replication: Optional[int], cause: Exception):
        self.width = width
        self.replication = replication
        where = "summary" if replication is None else f"replication {replication}"
        super().__init__(f"{where} at width {width} failed: {cause}")


class ReferenceMode(str, Enum):
    ANALYTIC = "analytic"
    TWO_SAMPLE = "two-sample"


def cube_widths(k_max: int = 16, k_min: int = 1) -> List[int]:
    return [k**3 for k in range(k_min, k_max + 1)]


def parse_widths(text: str) -> List[int]:
    """
    Parses "k^3:1..16" style ranges or an explicit list "1,8,27".
    """

    text = text.strip().replace(" ", "")
    match = re.fullmatch(r"k\^(\d+):(\d+)\.\.(\d+)", text)
    if match:
        power, low, high = (int(group) for group in match.groups())
        return [k**power for k in range(low, high + 1)]

    return [int(item) for item in text.split(",") if item]


def parse_metrics(items: Union[str, Sequence[str]]) -> List[Metric]:
    if isinstance(items, str):
        items = items.split(",")

    return [Metric(item.strip()) for item in items if item.strip()]


def nearest_rank(sorted_values: np.ndarray, percent: float) -> float:
    """Nearest-rank percentile of already sorted values, no interpolation."""

    rank = max(1, math.ceil(percent / 100.0 * len(sorted_values)))
    return float(sorted_values[rank - 1])


def library_version() -> str:
    try:
        return package_version("gaussnetBounds")
    except PackageNotFoundError:
        return "0.1.0"


class ExperimentSettings(BaseModel):
    """Budget of a width sweep."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    widths: List[int] = Field(
        default_factory=cube_widths, description="Strictly increasing widths n."
    )
    replications: int = Field(500, ge=2, description="Replications per width.")
    points_per_replication: int = Field(
        5000, ge=1, alias="points", description="Network draws per replication."
    )
    metrics: List[Metric] = Field(
        default_factory=lambda: [Metric.KS, Metric.TV, Metric.W1], min_length=1
    )
    master_seed: int = Field(0, ge=0, lt=2**64, alias="seed")
    reference: ReferenceMode = Field(
        ReferenceMode.ANALYTIC,
        description="Compare against the analytic Gaussian or a Gaussian sample.",
    )
    interplay_check: bool = Field(
        True,
        description="Estimate all three distances per replication to check "
        "KS <= TV and KS <= 2 sqrt(W1).",
    )

    @field_validator("widths", mode="before")
    @classmethod
    def parse_width_text(cls, value):
        if isinstance(value, str):
            return parse_widths(value)

        return value

    @field_validator("metrics", mode="before")
    @classmethod
    def parse_metric_text(cls, value):
        if isinstance(value, str):
            return parse_metrics(value)

        return value

    @field_validator("widths")
    @classmethod
    def widths_increase(cls, widths: List[int]):
        if not widths:
            raise ValueError("at least one width is required")

        if widths[0] < 1 or any(b <= a for a, b in zip(widths, widths[1:])):
            raise ValueError("widths must be positive and strictly increasing")

        return widths

    @field_validator("metrics")
    @classmethod
    def metrics_unique(cls, metrics: List[Metric]):
        if len(set(metrics)) != len(metrics):
            raise ValueError("metrics must not repeat")

        return metrics

    def fast(self) -> "ExperimentSettings":
        """The same sweep with the CI budget."""

        return self.model_copy(update=FAST_PROFILE)


class ExperimentConfig(ExperimentSettings):
    """A sweep budget together with the network it runs on."""

    network: NetworkConfig
    activation: ActivationSpec

    @model_validator(mode="after")
    def single_input(self):
        if self.network.num_inputs != 1:
            raise ValueError("sweeps estimate one-dimensional distances, use one input")

        return self

    def provenance_hash(self) -> str:
        payload = self.model_dump(mode="json", exclude={"network", "activation"})
        payload["network"] = network_hash(self.network, self.activation)
        return stable_hash(payload)


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    width: int = Field(ge=1)
    metric: Metric
    mean: float
    p2_5: float = Field(alias="p2.5")
    p97_5: float = Field(alias="p97.5")
    bound: float


class Provenance(BaseModel):
    config_hash: str
    master_seed: int
    version: str
    replications: Optional[int] = None
    points_per_replication: Optional[int] = None
    reference: Optional[ReferenceMode] = None
    sigma_sq: Optional[float] = None


class SweepTable(BaseModel):
    """One row per (width, metric)."""

    rows: List[SweepRow] = Field(default_factory=list)
    provenance: Provenance

    def rows_for(self, metric: Union[Metric, str]) -> List[SweepRow]:
        metric = Metric(metric)
        return [row for row in self.rows if row.metric == metric]

    def to_frame(self) -> pd.DataFrame:
        records = [row.model_dump(by_alias=True, mode="json") for row in self.rows]
        return pd.DataFrame.from_records(records, columns=CSV_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, provenance: Provenance) -> "SweepTable":
        rows = [SweepRow.model_validate(record) for record in frame.to_dict("records")]
        return cls(rows=rows, provenance=provenance)


def _replicate(
    ec: ExperimentConfig,
    cfg: NetworkConfig,
    replication: int,
    sigma_sq: float,
) -> Dict[Metric, float]:
    """Distances of one replication. Pure given its stream index."""

    try:
        seed = SeedSpec(master_seed=ec.master_seed, stream_index=replication)
        batch = sample_network(cfg, ec.activation, ec.points_per_replication, seed)

        if ec.interplay_check and ec.points_per_replication >= MIN_TV_SAMPLE:
            report = interplay_report(batch.values, sigma_sq)
            if not report.holds:
                logger.bind(width=cfg.width, replication=replication).warning(
                    f"Metric interplay violated: KS {report.ks.value:.4g}, "
                    f"TV {report.tv.value:.4g}, W1 {report.w1.value:.4g}"
                )

            estimates = {
                Metric.KS: report.ks,
                Metric.TV: report.tv,
                Metric.W1: report.w1,
            }
            values = {metric: estimates[metric].value for metric in ec.metrics}
        else:
            two_sample = ec.reference == ReferenceMode.TWO_SAMPLE
            values = {
                metric: distance_to_gaussian(batch.values, sigma_sq, metric).value
                for metric in ec.metrics
                if not (two_sample and metric == Metric.W1)
            }

        if ec.reference == ReferenceMode.TWO_SAMPLE and Metric.W1 in ec.metrics:
            # Reference streams sit after the network streams
            reference_seed = seed.with_stream(ec.replications + replication)
            reference = sample_reference(
                sigma_sq, ec.points_per_replication, reference_seed
            )
            values[Metric.W1] = two_sample_w1(batch.values, reference.values).value

        return values
    except Exception as exc:
        raise ReplicationError(cfg.width, replication, exc) from exc


def _summarize(
    width: int,
    metric: Metric,
    values: Sequence[float],
    bound: float,
) -> SweepRow:
    """
    Mean and nearest-rank percentile band of one (width, metric) cell.

    Raises:
        ReplicationError: the mean falls outside its own band.
    """

    ordered = np.sort(np.asarray(values, dtype=np.float64))
    mean = float(np.mean(ordered))
    low = nearest_rank(ordered, 2.5)
    high = nearest_rank(ordered, 97.5)

    if not low <= mean <= high:
        raise ReplicationError(
            width,
            None,
            ValueError(
                f"{metric.value} mean {mean:.4g} lies outside its percentile band "
                f"[{low:.4g}, {high:.4g}]"
            ),
        )

    return SweepRow(
        width=width, metric=metric, mean=mean, p2_5=low, p97_5=high, bound=bound
    )


async def run_sweep_async(
    ec: ExperimentConfig,
    threads: int = 1,
    show_progress: bool = False,
    rule: Optional[QuadratureRule] = None,
) -> SweepTable:
    """Runs every (width, replication) pair, at most `threads` at a time."""

    sigma_sq = network_variance(ec.network, ec.activation, rule)
    logger.info(
        f"Sweeping {len(ec.widths)} widths x {ec.replications} replications x "
        f"{ec.points_per_replication} points, sigma^2 = {sigma_sq:.6g}"
    )

    configs = {width: ec.network.with_width(width) for width in ec.widths}
    calls = [
        partial(_replicate, ec, configs[width], replication, sigma_sq)
        for width in ec.widths
        for replication in range(ec.replications)
    ]

    if show_progress:
        with get_loading_progress_bar() as progress:
            task = progress.add_task("[cyan]Replicating", total=len(calls))
            results = await gather_in_threads(
                calls, threads, lambda: progress.advance(task)
            )
    else:
        results = await gather_in_threads(calls, threads)

    rows = []
    for index, width in enumerate(ec.widths):
        block = results[index * ec.replications : (index + 1) * ec.replications]
        for metric in ec.metrics:
            bound = closed_form_bound(configs[width], ec.activation, metric, rule)
            rows.append(
                _summarize(width, metric, [item[metric] for item in block], bound.value)
            )

    provenance = Provenance(
        config_hash=ec.provenance_hash(),
        master_seed=ec.master_seed,
        version=library_version(),
        replications=ec.replications,
        points_per_replication=ec.points_per_replication,
        reference=ec.reference,
        sigma_sq=sigma_sq,
    )
    return SweepTable(rows=rows, provenance=provenance)


def run_sweep(
    ec: ExperimentConfig,
    threads: int = 1,
    show_progress: bool = False,
    rule: Optional[QuadratureRule] = None,
) -> SweepTable:
    """
    Synchronous entry to run_sweep_async.

    The output depends only on ec: every replication owns its stream and
    results are gathered in submission order.
    """

    return asyncio.run(run_sweep_async(ec, threads, show_progress, rule))


class RateFit(BaseModel):
    """Least-squares slope of log(mean) on log(width)."""

    slope: float
    standard_error: float
    intercept: float
    widths: List[int]
    excluded_widths: List[int] = Field(
        default_factory=list, description="Widths dropped for a nonpositive mean."
    )


def fit_rate(
    table: SweepTable,
    metric: Union[Metric, str],
    min_width: int = 1,
) -> RateFit:
    """
    Fits mean ~ C n^slope over the rows of one metric.

    Raises:
        ValueError: fewer than 4 usable widths remain.
    """

    rows = [row for row in table.rows_for(metric) if row.width >= min_width]
    usable = [row for row in rows if row.mean > 0]
    excluded = [row.width for row in rows if row.mean <= 0]
    if excluded:
        logger.warning(f"fit_rate excluded widths with nonpositive means: {excluded}")

    if len(usable) < 4:
        raise ValueError(f"fit_rate needs at least 4 widths, got {len(usable)}")

    log_width = np.log([row.width for row in usable])
    log_mean = np.log([row.mean for row in usable])
    fit = linregress(log_width, log_mean)

    return RateFit(
        slope=float(fit.slope),
        standard_error=float(fit.stderr),
        intercept=float(fit.intercept),
        widths=[row.width for row in usable],
        excluded_widths=excluded,
    )


def meta_path(path: pathlib.Path) -> pathlib.Path:
    return path.with_suffix(".meta.json")


def emit_csv(table: SweepTable, path: Union[str, pathlib.Path]) -> pathlib.Path:
    """
    Writes the table with 17 significant digits and a provenance sidecar.

    I/O errors propagate unchanged.
    """

    path = pathlib.Path(path)
    table.to_frame().to_csv(
        path, index=False, float_format="%.17g", lineterminator="\n"
    )

    with open(meta_path(path), "w", encoding="utf8") as meta_file:
        meta_file.write(table.provenance.model_dump_json(indent=2))

    logger.info(f"Wrote {len(table.rows)} rows to {path}")
    return path


def parse_csv(path: Union[str, pathlib.Path]) -> SweepTable:
    """Reads a table written by emit_csv."""

    path = pathlib.Path(path)
    frame = pd.read_csv(path, float_precision="round_trip", dtype={"metric": str})

    sidecar = meta_path(path)
    if sidecar.exists():
        provenance = Provenance.model_validate_json(sidecar.read_text(encoding="utf8"))
    else:
        provenance = Provenance(config_hash="", master_seed=0, version="unknown")

    return SweepTable.from_frame(frame, provenance)


class GrowthRow(BaseModel):
    m: float
    envelope_a: float
    envelope_b: float
    envelope_gamma: float
    sigma_sq: float
    bound: float


class GrowthTable(BaseModel):
    """Closed-form bound of a ReLU approximant as its sharpness m grows."""

    family: ActivationKind
    metric: Metric
    width: int
    rows: List[GrowthRow]

    @property
    def strictly_increasing(self) -> bool:
        bounds = [row.bound for row in self.rows]
        return all(b > a for a, b in zip(bounds, bounds[1:]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame.from_records([row.model_dump() for row in self.rows])


def relu_growth(
    family: Union[ActivationKind, str] = ActivationKind.SOFTPLUS,
    ms: Optional[Sequence[float]] = None,
    width: int = 100,
    metric: Union[Metric, str] = Metric.W1,
    rule: Optional[QuadratureRule] = None,
) -> GrowthTable:
    """
    Unit-slice bound of softplus-approx(m) or sau-approx(m) over m.

    Each m uses the envelope its family ships, which grows with m through
    the bound on tau''.
    """

    family = ActivationKind(family)
    if family not in SHARPNESS_KINDS:
        raise ValueError(f"'{family.value}' is not a ReLU approximant family")

    metric = Metric(metric)
    rows = []
    for m in ms or DEFAULT_GROWTH_SHARPNESS:
        act = ActivationSpec.builtin(family, m=m)
        report = unit_slice_bound(width, act, metric, rule)
        rows.append(
            GrowthRow(
                m=m,
                envelope_a=act.envelope_a,
                envelope_b=act.envelope_b,
                envelope_gamma=act.envelope_gamma,
                sigma_sq=report.sigma_sq,
                bound=report.value,
            )
        )

    table = GrowthTable(family=family, metric=metric, width=width, rows=rows)
    if not table.strictly_increasing:
        logger.warning(f"{family.value} bound is not strictly increasing in m")

    return table
