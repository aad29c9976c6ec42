"""SVG charts of sweep tables. Needs the optional matplotlib dependency."""

import pathlib
from typing import List, Union

from loguru import logger

from gaussnet.harness import SweepTable
from gaussnet.model import Metric


def plot_sweep(
    table: SweepTable,
    metric: Union[Metric, str],
    path: Union[str, pathlib.Path],
) -> pathlib.Path:
    """
    Log-log chart of one metric: mean dots, the 2.5/97.5 percentile band
    and the bound curve.
    """

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    metric = Metric(metric)
    rows = table.rows_for(metric)
    if not rows:
        raise ValueError(f"table has no rows for {metric.value}")

    widths = [row.width for row in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.fill_between(
        widths,
        [row.p2_5 for row in rows],
        [row.p97_5 for row in rows],
        color="tab:blue",
        alpha=0.25,
        linewidth=0,
        label="2.5-97.5 percentiles",
    )
    ax.plot(widths, [row.mean for row in rows], "o", color="black", label="mean")
    ax.plot(widths, [row.bound for row in rows], "-", color="tab:red", label="bound")

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("width n")
    ax.set_ylabel(f"d_{metric.value}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()

    path = pathlib.Path(path)
    fig.savefig(path, format="svg")
    plt.close(fig)

    logger.info(f"Wrote {metric.value} chart to {path}")
    return path


def plot_all(table: SweepTable, out_dir: Union[str, pathlib.Path], stem: str = "sweep"):
    """One chart per metric present in the table."""

    out_dir = pathlib.Path(out_dir)
    written: List[pathlib.Path] = []
    for metric in dict.fromkeys(row.metric for row in table.rows):
        path = out_dir / f"{stem}_{metric.value}.svg"
        written.append(plot_sweep(table, metric, path))

    return written
