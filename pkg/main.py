"""The main gaussnet module. Parses arguments, loads config and runs a subcommand."""

import argparse
from typing import Optional

from loguru import logger

from common.actions import run_subcommand
from common.args import convert_args_to_dict, init_argparser
from common.gaussnet_config import config
from common.logger import setup_logger
from common.signals import install_signal_handlers
from gaussnet.model import ConfigValidationError


def entrypoint(
    args: Optional[argparse.Namespace] = None,
    parser: Optional[argparse.ArgumentParser] = None,
) -> int:
    setup_logger()

    # Set up signal aborting
    install_signal_handlers()

    # Parse and override config from args
    if args is None:
        parser = init_argparser()
        args = parser.parse_args()

    dict_args = convert_args_to_dict(args, parser)

    # load config
    try:
        config.load(dict_args)
    except (ConfigValidationError, OSError) as exc:
        logger.error(f"Invalid configuration: {exc}")
        return 2

    # Reinstall the sinks now that the logging section is known
    setup_logger(config.logging.log_level, config.logging.log_to_file)

    return run_subcommand(args)


if __name__ == "__main__":
    raise SystemExit(entrypoint())
