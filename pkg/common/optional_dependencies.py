"""Construct a model of all optional dependencies"""

import importlib.util
from importlib.metadata import version as package_version
from loguru import logger
from packaging import version
from pydantic import BaseModel, computed_field


# Declare the exported parts of this module
__all__ = ["dependencies"]


class DependenciesModel(BaseModel):
    """Model of which optional dependencies are installed."""

    matplotlib: bool

    @computed_field
    @property
    def plotting(self) -> bool:
        return self.matplotlib


def is_installed(package_name: str) -> bool:
    return importlib.util.find_spec(package_name) is not None


def get_installed_deps() -> DependenciesModel:
    """One flag per field of DependenciesModel, named after its package."""

    return DependenciesModel(
        **{name: is_installed(name) for name in DependenciesModel.model_fields}
    )


def check_package_version(package_name: str, required_version_str: str):
    """
    Fetches and verifies a given package version.

    This assumes that the required package is installed.
    """

    required_version = version.parse(required_version_str)
    current_version = version.parse(package_version(package_name).split("+")[0])

    if current_version < required_version:
        raise RuntimeError(
            f"gaussnet requires {package_name} {required_version} or greater, "
            f"found {current_version}. Please update your dependencies."
        )

    logger.debug(f"{package_name} version: {current_version}")


dependencies = get_installed_deps()
