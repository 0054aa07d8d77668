"""Locations of the files shipped with the package."""

from importlib import resources
from pathlib import Path


def path(name: str) -> Path:
    return Path(str(resources.files("qualqa").joinpath("resources", name)))
