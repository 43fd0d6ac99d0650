"""Reachability solving on interval models and the end-to-end query pipeline."""

from .engine import (
    ChoiceSystem,
    Mode,
    QualMode,
    QualResult,
    QuantResult,
    SolveConfig,
    extremal_value,
    policy_value,
    solve_imdp_qual,
    solve_imdp_quant,
    solve_qual,
    solve_quant,
)
from .kernels import BACKEND
from .pipeline import Answer, QuantQuery, Threshold, decide, initial_state, solve_query

__all__ = [
    "BACKEND", "Answer", "ChoiceSystem", "Mode", "QualMode", "QualResult", "QuantQuery",
    "QuantResult", "SolveConfig", "Threshold", "decide", "extremal_value", "initial_state",
    "policy_value", "solve_imdp_qual", "solve_imdp_quant", "solve_qual", "solve_quant",
    "solve_query",
]
