import pathlib
from inspect import getdoc
from os import getenv
from textwrap import dedent
from typing import Optional, Tuple

from loguru import logger
from pydantic import BaseModel, ValidationError
from ruamel.yaml import YAML
from ruamel.yaml.comments import CommentedMap, CommentedSeq
from ruamel.yaml.error import YAMLError

from common.config_models import BaseConfigModel, GaussNetConfigModel
from common.utils import deep_merge_dicts, filter_none_values, unwrap
from gaussnet.gauss_moments import QuadratureRule
from gaussnet.harness import ExperimentConfig
from gaussnet.model import (
    ActivationSpec,
    ConfigValidationError,
    NetworkConfig,
    validate_config,
)

yaml = YAML(typ=["rt", "safe"])

DEFAULT_CONFIG_PATH = pathlib.Path("config.yml")
ENV_PREFIX = "GAUSSNET"


class GaussNetConfig(GaussNetConfigModel):
    def load(self, arguments: Optional[dict] = None):
        """
        Loads the application config.

        Sources apply in order: file, then environment, then CLI arguments.
        """

        arguments_dict = unwrap(arguments, {})
        config_path = unwrap(
            arguments_dict.get("config", {}).get("config"), DEFAULT_CONFIG_PATH
        )

        configs = [
            self._from_file(pathlib.Path(config_path)),
            self._from_environment(),
            self._from_args(arguments_dict),
        ]

        # Remove None (aka unset) values from the configs and merge them together
        configs = filter_none_values(configs)
        merged_config = deep_merge_dicts(*configs)

        try:
            merged_config_model = GaussNetConfigModel.model_validate(merged_config)
        except ValidationError as exc:
            raise ConfigValidationError(str(exc)) from exc

        for field in GaussNetConfigModel.model_fields.keys():
            setattr(self, field, getattr(merged_config_model, field))

        return self

    def _from_file(self, config_path: pathlib.Path):
        """Loads a JSON or YAML config. A missing default file is not an error."""

        try:
            with open(str(config_path.resolve()), "r", encoding="utf8") as config_file:
                cfg = yaml.load(config_file)
        except YAMLError as exc:
            raise ConfigValidationError(f"cannot parse {config_path}: {exc}") from exc
        except FileNotFoundError:
            if config_path != DEFAULT_CONFIG_PATH:
                raise

            logger.debug(f"The '{config_path.name}' file cannot be found")
            return {}

        logger.info(f"Loaded config from '{config_path}'")
        return unwrap(cfg, {})

    def _from_args(self, args: dict):
        """Loads config sections from the provided arguments."""

        config = {}
        for key in GaussNetConfigModel.model_fields.keys():
            override = args.get(key)
            if override:
                config[key] = override

        return config

    def _from_environment(self):
        """Loads configuration from GAUSSNET_<SECTION>_<FIELD> variables."""

        config = {}

        for field_name, field_info in GaussNetConfigModel.model_fields.items():
            section_config = {}
            section_type = field_info.default_factory().__class__
            for sub_field_name in section_type.model_fields.keys():
                setting = getenv(
                    f"{ENV_PREFIX}_{field_name}_{sub_field_name}".upper(), None
                )
                if setting is not None:
                    section_config[sub_field_name] = setting

            config[field_name] = section_config

        return config

    def network_and_activation(self) -> Tuple[NetworkConfig, ActivationSpec]:
        """Validated domain models for the network and activation sections."""

        return validate_config(
            self.network.model_dump(exclude_none=True),
            self.activation.model_dump(exclude_none=True),
        )

    def quadrature_rule(self) -> QuadratureRule:
        return QuadratureRule.gauss_hermite(self.developer.quadrature_order)

    def experiment_config(self) -> ExperimentConfig:
        network, activation = self.network_and_activation()
        experiment = self.experiment

        try:
            ec = ExperimentConfig(
                widths=experiment.widths,
                replications=experiment.reps,
                points=experiment.points,
                metrics=experiment.metrics,
                seed=experiment.seed,
                reference=experiment.reference,
                interplay_check=experiment.interplay_check,
                network=network,
                activation=activation,
            )
        except ValidationError as exc:
            raise ConfigValidationError(str(exc)) from exc

        return ec.fast() if experiment.fast else ec


# Create an empty instance of the config class
config: GaussNetConfig = GaussNetConfig()


def generate_config_file(
    model: BaseModel = None,
    filename: str = "config_sample.yml",
) -> None:
    """Creates a sample config file from the Pydantic models."""

    schema = unwrap(model, GaussNetConfigModel())
    preamble = """
    # Sample YAML file for configuration.
    # Comment and uncomment values as needed.
    # Every value has a default within the application.
    # JSON documents with the same keys are accepted too.

    # Pass it with --config, or save it as config.yml in the working directory.\n
    """

    yaml_content = pydantic_model_to_yaml(schema)

    with open(filename, "w") as f:
        f.write(dedent(preamble).lstrip())
        yaml.dump(yaml_content, f)

    logger.info(f"Wrote sample config to {filename}")


def pydantic_model_to_yaml(model: BaseModel, indentation: int = 0) -> CommentedMap:
    """
    Recursively converts a Pydantic model into a CommentedMap,
    with descriptions as comments in YAML.
    """

    yaml_data = CommentedMap()

    fields = type(model).model_fields
    for iteration, (field_name, field_info) in enumerate(fields.items()):
        value = getattr(model, field_name)

        if isinstance(value, BaseConfigModel):
            if not value._metadata.include_in_config:
                continue

            yaml_data[field_name] = pydantic_model_to_yaml(
                value, indentation=indentation + 2
            )
            comment = getdoc(value)
        elif isinstance(value, list) and len(value) > 0:
            # Normal lists prefer the YAML flow style, nested ones included
            yaml_list = CommentedSeq()
            yaml_list.fa.set_flow_style()
            for element in value:
                if isinstance(element, list):
                    inner = CommentedSeq(element)
                    inner.fa.set_flow_style()
                    yaml_list.append(inner)
                else:
                    yaml_list.append(element)

            yaml_data[field_name] = yaml_list
            comment = field_info.description
        else:
            yaml_data[field_name] = value
            comment = field_info.description

        if comment:
            # Add a newline to every comment but the first one
            if iteration != 0:
                comment = f"\n{comment}"

            yaml_data.yaml_set_comment_before_after_key(
                field_name, before=comment, indent=indentation
            )

    return yaml_data
