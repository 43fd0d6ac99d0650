"""Verification of one-clock clock-dependent probabilistic timed automata."""

from .dsl import ParseFailure, parse, render
from .imc import Imc, reduce_to_imc
from .imdp import Imdp, build_imdp
from .model import Cdpta, ModelError, validate

__version__ = "0.1.0"

__all__ = [
    "Cdpta", "Imc", "Imdp", "ModelError", "ParseFailure", "build_imdp", "parse",
    "reduce_to_imc", "render", "validate", "__version__",
]
