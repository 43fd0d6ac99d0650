"""End-to-end query answering for a one-clock cdPTA."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from ..imc import Base, reduce_to_imc
from ..imdp import IntervalB, RegionState, build_imdp
from ..model import Cdpta, ModelError, validate
from .engine import (
    ChoiceSystem,
    Mode,
    QualMode,
    SolveConfig,
    policy_value,
    quant_system,
    qual_indices,
)

_OPS = {"≥": ">=", "≤": "<=", ">=": ">=", "<=": "<=", ">": ">", "<": "<"}
_THRESHOLD_RE = re.compile(r"^\s*(>=|<=|≥|≤|>|<)\s*(\d+(?:/\d+)?|\d*\.\d+)\s*$")


@dataclass(frozen=True)
class Threshold:
    op: str
    bound: Fraction

    @classmethod
    def parse(cls, text: str) -> "Threshold":
        m = _THRESHOLD_RE.match(text)
        if not m:
            raise ValueError(f"bad threshold {text!r}; expected e.g. '>= 4/5'")
        bound = Fraction(m.group(2))
        if not 0 <= bound <= 1:
            raise ValueError("threshold must lie in [0,1]")
        return cls(_OPS[m.group(1)], bound)

    def test(self, value) -> bool:
        return {">=": value >= self.bound, ">": value > self.bound,
                "<=": value <= self.bound, "<": value < self.bound}[self.op]

    def __str__(self) -> str:
        return f"{self.op} {self.bound}"


@dataclass
class QuantQuery:
    mode: Mode
    threshold: Optional[Threshold] = None
    epsilon: float = 1e-9


@dataclass
class Answer:
    value: Optional[float] = None
    verdict: Optional[bool] = None
    undecided: bool = False
    exact_value: Optional[Fraction] = None
    holds: Optional[bool] = None
    iterations: int = 0
    converged: bool = True
    stats: dict = field(default_factory=dict)


def decide(value: float, threshold: Threshold, epsilon: float, exact: Optional[Fraction] = None,
           mode: Mode = Mode.MAX):
    """Compare an approximate value against a threshold.

    Returns ``(verdict, undecided)``.  Outside the ``10 * epsilon`` band the
    float comparison stands.  Inside it, an exact policy value (a lower bound
    for MAX, an upper bound for MIN) settles the comparisons it can certify;
    otherwise the float comparison is reported as undecided.
    """
    if abs(value - float(threshold.bound)) >= 10 * epsilon:
        return threshold.test(value), False
    if exact is not None:
        lower = mode == Mode.MAX
        if lower and threshold.op in (">=", ">") and threshold.test(exact):
            return True, False
        if lower and threshold.op in ("<=", "<") and not threshold.test(exact):
            return False, False
        if not lower and threshold.op in ("<=", "<") and threshold.test(exact):
            return True, False
        if not lower and threshold.op in (">=", ">") and not threshold.test(exact):
            return False, False
    return threshold.test(value), True


def initial_state(model: Cdpta):
    return Base(RegionState(model.initial, IntervalB(0, 0)))


def solve_query(model: Cdpta, F: Iterable[str], query: Union[QuantQuery, QualMode, str]) -> Answer:
    report = validate(model)
    if not report.ok:
        first = report.violations[0]
        raise ModelError(first.code, str(report))
    F = set(F)
    unknown = F - set(model.locations)
    if unknown:
        raise ModelError("TARGET_UNKNOWN_STATE", f"unknown location(s): {', '.join(sorted(unknown))}")
    t0 = time.perf_counter()
    imdp = build_imdp(model)
    imc = reduce_to_imc(imdp)
    t1 = time.perf_counter()
    sys = ChoiceSystem.from_imc(imc)
    targets = imc.targets_for(F)
    start = initial_state(model)
    stats = {
        "imdp_states": len(imdp.states),
        "imdp_transitions": imdp.transition_count(),
        "imc_states": len(imc.states),
        "imc_transitions": imc.transition_count(),
        "build_seconds": t1 - t0,
    }
    if isinstance(query, (QualMode, str)):
        mode = QualMode(query) if isinstance(query, str) else query
        holds = qual_indices(sys, sys.target_indices(targets), mode)
        stats["solve_seconds"] = time.perf_counter() - t1
        return Answer(holds=sys.index[start] in holds, stats=stats)
    cfg = SolveConfig(epsilon=query.epsilon, mode=query.mode)
    res = quant_system(sys, targets, cfg)
    value = res.values[start]
    ans = Answer(value=value, iterations=res.iterations, converged=res.converged, stats=stats)
    if query.threshold is not None:
        if abs(value - float(query.threshold.bound)) < 10 * cfg.epsilon:
            ans.exact_value = policy_value(sys, targets, res, cfg.mode, start)
        ans.verdict, ans.undecided = decide(value, query.threshold, cfg.epsilon, ans.exact_value, cfg.mode)
    stats["solve_seconds"] = time.perf_counter() - t1
    return ans
