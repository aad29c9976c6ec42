import signal
import sys
from loguru import logger


SHUTTING_DOWN: bool = False

# Shell convention for a process ended by SIGINT
INTERRUPTED_EXIT_CODE = 128 + signal.SIGINT


def signal_handler(*_):
    """Signal handler for the main function. Partial outputs are not written."""

    global SHUTTING_DOWN

    if SHUTTING_DOWN:
        return

    logger.warning("Shutdown signal called. Exiting without writing results.")
    SHUTTING_DOWN = True

    sys.exit(INTERRUPTED_EXIT_CODE)


def install_signal_handlers():
    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)
