"""
Internal logging utility.

Everything goes to stderr so stdout stays reserved for JSON results.
"""

import os

from loguru import logger
from rich.console import Console
from rich.markup import escape
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    TaskProgressColumn,
    TextColumn,
    TimeRemainingColumn,
)

from common.utils import unwrap

RICH_CONSOLE = Console(stderr=True)
LOG_LEVEL = os.getenv("GAUSSNET_LOG_LEVEL", "INFO")

LEVEL_COLORS = {
    "TRACE": "dim blue",
    "DEBUG": "cyan",
    "INFO": "green",
    "SUCCESS": "bold green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "bold white on red",
}

# Keys bound with logger.bind() that show up as a short prefix
CONTEXT_KEYS = {"width": "n", "replication": "r", "metric": "metric"}


def get_loading_progress_bar():
    """Gets a pre-made progress bar for sweeps and Monte-Carlo runs."""

    return Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        MofNCompleteColumn(),
        TimeRemainingColumn(),
        console=RICH_CONSOLE,
        transient=True,
    )


def _context(record: dict) -> str:
    """Renders bound sweep coordinates, e.g. "[n=27 r=3] "."""

    extra = record.get("extra", {})
    parts = [
        f"{short}={extra[key]}" for key, short in CONTEXT_KEYS.items() if key in extra
    ]

    return f"[{' '.join(parts)}] " if parts else ""


def _log_formatter(record: dict):
    """Rich markup for one record, one prefixed line per message line."""

    time = record.get("time")
    level = record.get("level")
    color = LEVEL_COLORS.get(level.name, "cyan")
    prefix = (
        f"[grey37]{time:YYYY-MM-DD HH:mm:ss.SSS}[/grey37] "
        f"[{color}]{level.name}[/{color}]:{' ' * (9 - len(level.name))}"
    )

    # Loguru runs str.format on the result, Rich parses markup
    message = unwrap(record.get("message"), "")
    message = message.replace("{", "{{").replace("}", "}}").replace("<", "\\<")
    message = escape(_context(record) + message)

    return "\n".join(prefix + line for line in message.splitlines() or [""])


def _file_formatter(record: dict):
    context = _context(record).replace("{", "{{").replace("}", "}}")
    return (
        "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | "
        + context
        + "{message}\n{exception}"
    )


def setup_logger(level: str = None, log_to_file: bool = False):
    """
    Installs the console sink and, if asked, a rotated file sink in logs/.

    Safe to call again once the logging config section is known.
    """

    level = unwrap(level, LOG_LEVEL).upper()

    logger.remove()
    logger.add(RICH_CONSOLE.print, level=level, format=_log_formatter, colorize=True)

    if log_to_file:
        logger.add(
            "logs/gaussnet_{time}.log",
            level=level,
            format=_file_formatter,
            rotation="20 MB",
            retention=10,
            compression="zip",
        )
