"""Argparser for the subcommands and their config overrides"""

import argparse
from typing import Optional
from pydantic import BaseModel

from common.config_models import GaussNetConfigModel
from common.utils import is_list_type, unwrap, unwrap_optional_type


def add_field_to_group(group, field_name, field_type, field) -> None:
    """
    Adds a Pydantic field to an argparse argument group.
    """

    kwargs = {
        "help": field.description if field.description else "No description available",
    }

    # If the inner type contains a list, specify argparse as such
    if is_list_type(field_type):
        kwargs["nargs"] = "+"
    elif unwrap_optional_type(field_type) is bool:
        kwargs["action"] = argparse.BooleanOptionalAction

    flag_name = field_name.replace("_", "-")
    group.add_argument(f"--{flag_name}", dest=field_name, **kwargs)


def config_parent_parser() -> argparse.ArgumentParser:
    """One argument group per config section, shared by every subcommand."""

    parent = argparse.ArgumentParser(add_help=False)

    # Loop through each top-level field in the config
    for field_name, field_info in GaussNetConfigModel.model_fields.items():
        field_type = unwrap_optional_type(field_info.annotation)
        group = parent.add_argument_group(
            field_name, description=f"Arguments for {field_name}"
        )

        # Check if the field_type is a Pydantic model
        if issubclass(field_type, BaseModel):
            for sub_field_name, sub_field_info in field_type.model_fields.items():
                sub_field_type = sub_field_info.annotation
                add_field_to_group(
                    group, sub_field_name, sub_field_type, sub_field_info
                )
        else:
            field_name = field_name.replace("_", "-")
            group.add_argument(f"--{field_name}", help=f"Argument for {field_name}")

    return parent


def init_argparser(
    existing_parser: Optional[argparse.ArgumentParser] = None,
) -> argparse.ArgumentParser:
    """
    Initializes an argparse parser based on a Pydantic config schema.

    If an existing provider is given, use that.
    """

    parser = unwrap(
        existing_parser,
        argparse.ArgumentParser(
            description="Gaussian approximation bounds for shallow networks"
        ),
    )

    add_subcommands(parser, config_parent_parser())

    return parser


def add_subcommands(parser: argparse.ArgumentParser, parent: argparse.ArgumentParser):
    """Adds subcommands to an existing argparser"""

    actions_subparsers = parser.add_subparsers(
        dest="actions", required=True, help="Action to run."
    )

    bound_parser = actions_subparsers.add_parser(
        "bound", parents=[parent], help="Prints the closed-form bound as JSON"
    )
    bound_parser.add_argument(
        "--metric", help="Distance of the bound: KS, TV or W1 (default: W1)"
    )

    simulate_parser = actions_subparsers.add_parser(
        "simulate", parents=[parent], help="Draws raw network outputs"
    )
    simulate_parser.add_argument(
        "--count", type=int, help="Number of draws (default: experiment points)"
    )
    simulate_parser.add_argument(
        "--dump", help="Path of the text file to write (default: <out>/samples.txt)"
    )

    distances_parser = actions_subparsers.add_parser(
        "distances",
        parents=[parent],
        help="Estimates KS, TV and W1 between a sample and the limiting Gaussian",
    )
    distances_parser.add_argument(
        "--sample", help="Text file of draws to read instead of sampling the network"
    )
    distances_parser.add_argument(
        "--count", type=int, help="Number of draws (default: experiment points)"
    )

    actions_subparsers.add_parser(
        "sweep",
        parents=[parent],
        help="Runs the width sweep and writes the CSV table",
    )

    poincare_parser = actions_subparsers.add_parser(
        "poincare",
        parents=[parent],
        help="Monte-Carlo estimate of the second-order Poincare bound",
    )
    poincare_parser.add_argument(
        "--metric", help="Distance of the bound: KS, TV or W1 (default: W1)"
    )

    growth_parser = actions_subparsers.add_parser(
        "relu-growth",
        parents=[parent],
        help="Bound of a ReLU approximant as its sharpness m grows",
    )
    growth_parser.add_argument(
        "--family",
        help="softplus-approx or sau-approx (default: softplus-approx)",
    )
    growth_parser.add_argument(
        "--ms", nargs="+", type=float, help="Sharpness values (default: 1 2 4 8 16)"
    )

    config_export_parser = actions_subparsers.add_parser(
        "export-config", help="Generates and exports a sample config YAML file"
    )
    config_export_parser.add_argument(
        "--export-path",
        help="Path to export the generated sample config (default: config_sample.yml)",
    )


def _chosen_subparser(
    args: argparse.Namespace, parser: argparse.ArgumentParser
) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(args.actions, parser)

    return parser


def convert_args_to_dict(
    args: argparse.Namespace, parser: argparse.ArgumentParser
) -> dict:
    """Broad conversion of surface level arg groups to dictionaries"""

    section_names = GaussNetConfigModel.model_fields.keys()
    arg_groups = {}
    for group in _chosen_subparser(args, parser)._action_groups:
        if group.title not in section_names:
            continue

        group_dict = {}
        for arg in group._group_actions:
            value = getattr(args, arg.dest, None)
            if value is not None:
                group_dict[arg.dest] = value

        arg_groups[group.title] = group_dict

    return arg_groups
