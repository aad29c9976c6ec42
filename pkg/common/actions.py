import argparse
import json
import pathlib
import traceback
from typing import List

import numpy as np
from loguru import logger

from common.gaussnet_config import config, generate_config_file
from common.optional_dependencies import check_package_version, dependencies
from common.utils import unwrap
from gaussnet.bounds import closed_form_bound
from gaussnet.distances import (
    MIN_TV_SAMPLE,
    distance_to_gaussian,
    interplay_report,
)
from gaussnet.gauss_moments import network_variance
from gaussnet.harness import (
    emit_csv,
    fit_rate,
    relu_growth,
    run_sweep,
)
from gaussnet.model import ActivationKind, ConfigValidationError, Metric
from gaussnet.poincare import (
    chatterjee_tv_bound_mc,
    poincare_bound_mc,
    poincare_bound_multi_mc,
)
from gaussnet.sampler import SeedSpec, dump_samples, sample_network

MATPLOTLIB_MIN_VERSION = "3.7"


def _out_dir() -> pathlib.Path:
    out_dir = pathlib.Path(config.experiment.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _emit(payload) -> None:
    """Results go to stdout, logs to stderr."""

    print(json.dumps(payload, indent=2))


def _metric(args: argparse.Namespace) -> Metric:
    return Metric(unwrap(getattr(args, "metric", None), Metric.W1))


def bound_action(args: argparse.Namespace):
    cfg, act = config.network_and_activation()
    report = closed_form_bound(cfg, act, _metric(args), config.quadrature_rule())
    _emit(report.model_dump(mode="json", exclude_none=True))


def simulate_action(args: argparse.Namespace):
    cfg, act = config.network_and_activation()
    count = unwrap(args.count, config.experiment.points)
    seed = SeedSpec(master_seed=config.experiment.seed)

    batch = sample_network(cfg, act, count, seed)
    dump_path = unwrap(args.dump, _out_dir() / "samples.txt")
    dump_samples(batch, dump_path)


def distances_action(args: argparse.Namespace):
    cfg, act = config.network_and_activation()
    sigma_sq = network_variance(cfg, act, config.quadrature_rule())

    if args.sample:
        sample = np.loadtxt(args.sample, dtype=np.float64, ndmin=1)
        logger.info(f"Read {sample.size} draws from {args.sample}")
    else:
        count = unwrap(args.count, config.experiment.points)
        seed = SeedSpec(master_seed=config.experiment.seed)
        sample = sample_network(cfg, act, count, seed).values

    metrics = [Metric(metric) for metric in config.experiment.metrics]
    payload = {"sigma_sq": sigma_sq, "sample_size": int(sample.size)}

    if sample.size >= MIN_TV_SAMPLE:
        report = interplay_report(sample, sigma_sq)
        estimates = {Metric.KS: report.ks, Metric.TV: report.tv, Metric.W1: report.w1}
        payload["interplay_holds"] = report.holds
        if not report.holds:
            logger.warning("The sample violates the KS/TV/W1 interplay inequalities")
    else:
        estimates = {
            metric: distance_to_gaussian(sample, sigma_sq, metric)
            for metric in metrics
        }

    payload["estimates"] = [
        estimates[metric].model_dump(mode="json") for metric in metrics
    ]
    _emit(payload)


def _write_charts(table, out_dir: pathlib.Path) -> List[pathlib.Path]:
    if not dependencies.plotting:
        logger.error(
            "SVG charts need matplotlib. "
            "Install the plotting extra: pip install .[extras]"
        )
        return []

    check_package_version("matplotlib", MATPLOTLIB_MIN_VERSION)

    from gaussnet.plotting import plot_all

    return plot_all(table, out_dir)


def sweep_action(_args: argparse.Namespace):
    ec = config.experiment_config()
    table = run_sweep(
        ec,
        threads=config.developer.threads,
        show_progress=True,
        rule=config.quadrature_rule(),
    )

    out_dir = _out_dir()
    emit_csv(table, out_dir / "sweep.csv")

    for metric in ec.metrics:
        try:
            fit = fit_rate(table, metric)
        except ValueError as exc:
            logger.info(f"Skipping the {metric.value} rate fit: {exc}")
            continue

        logger.info(
            f"{metric.value} decays like n^{fit.slope:.3f} "
            f"(standard error {fit.standard_error:.3f})"
        )

    if config.experiment.svg:
        _write_charts(table, out_dir)


def poincare_action(args: argparse.Namespace):
    cfg, act = config.network_and_activation()
    metric = _metric(args)
    options = {
        "mc_samples": config.experiment.mc_samples,
        "seed": SeedSpec(master_seed=config.experiment.seed),
        "rule": config.quadrature_rule(),
        "threads": config.developer.threads,
    }

    reports = [closed_form_bound(cfg, act, metric, options["rule"])]
    if cfg.num_inputs > 1:
        reports.append(poincare_bound_multi_mc(cfg, act, **options))
    else:
        reports.append(poincare_bound_mc(cfg, act, metric, **options))
        if metric == Metric.TV:
            reports.append(chatterjee_tv_bound_mc(cfg, act, **options))

    _emit([report.model_dump(mode="json", exclude_none=True) for report in reports])


def relu_growth_action(args: argparse.Namespace):
    table = relu_growth(
        family=unwrap(args.family, ActivationKind.SOFTPLUS),
        ms=args.ms,
        width=config.network.n,
        metric=_metric(args),
        rule=config.quadrature_rule(),
    )

    csv_path = _out_dir() / f"relu_growth_{table.family.value}.csv"
    table.to_frame().to_csv(
        csv_path, index=False, float_format="%.17g", lineterminator="\n"
    )
    logger.info(f"Wrote {len(table.rows)} rows to {csv_path}")

    _emit(table.model_dump(mode="json"))


def config_export_action(args: argparse.Namespace):
    export_path = unwrap(args.export_path, "config_sample.yml")
    generate_config_file(filename=export_path)


ACTIONS = {
    "bound": bound_action,
    "simulate": simulate_action,
    "distances": distances_action,
    "sweep": sweep_action,
    "poincare": poincare_action,
    "relu-growth": relu_growth_action,
    "export-config": config_export_action,
}


def run_subcommand(args: argparse.Namespace) -> int:
    """Runs the chosen subcommand and returns the process exit code."""

    match args.actions:
        case str(name) if name in ACTIONS:
            action = ACTIONS[name]
        case _:
            logger.error(f"Unknown action '{args.actions}'")
            return 2

    try:
        action(args)
    except ConfigValidationError as exc:
        logger.error(f"Invalid configuration: {exc}")
        return 2
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        logger.error(f"{args.actions} failed: {type(exc).__name__}: {exc}")
        logger.debug(traceback.format_exc())
        return 1

    return 0
