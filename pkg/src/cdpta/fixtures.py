"""Bundled example models."""

from importlib import resources

from .dsl import parse
from .model import Cdpta

NAMES = ("fig1", "notinit")


def text(name: str) -> str:
    return resources.files("cdpta").joinpath("data", f"{name}.cdpta").read_text()


def load(name: str) -> Cdpta:
    return parse(text(name))


def path(name: str) -> str:
    return str(resources.files("cdpta").joinpath("data", f"{name}.cdpta"))
