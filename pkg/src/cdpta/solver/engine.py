"""Quantitative and qualitative reachability on interval models.

Every routine works on a :class:`ChoiceSystem`: a list of states, each owning
one or more interval rows.  An IMC has exactly one row per state; an IMDP has
one row per available action.  Using the same engine for both makes the
IMDP-versus-reduced-IMC comparison a test of the reduction alone.

Quantitative values are computed on the closed rows.  Qualitative answers use
the rows exactly as given, so open endpoints matter there.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from ..intervals import (
    ZERO,
    IntervalDistribution,
    assignably_positive,
    close_intervals,
    positive_mass_feasible,
    support_feasible,
)
from ..model import ModelError
from . import kernels


class Mode(enum.Enum):
    MAX = "max"
    MIN = "min"


class QualMode(enum.Enum):
    FORALL0 = "forall0"
    EXISTS0 = "exists0"
    EXISTS1 = "exists1"
    FORALL1 = "forall1"


@dataclass(frozen=True)
class SolveConfig:
    epsilon: float = 1e-9
    max_iterations: int = 10**6
    mode: Mode = Mode.MAX

    def __post_init__(self) -> None:
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode.lower()))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class QuantResult:
    values: Dict[Hashable, float]
    iterations: int
    converged: bool
    exact_zero: Set[Hashable]
    exact_one: Set[Hashable]
    trace: Optional[List[List[float]]] = None


@dataclass
class QualResult:
    mode: QualMode
    holds: Set[Hashable]


# ------------------------------------------------------------------ inner step

def extremal_value(row_closed: Mapping[Hashable, object], values: Mapping[Hashable, object], mode):
    """Optimise ``sum alpha(t) * values(t)`` over the assignments of a closed row.

    Targets are visited best-first (stable with respect to row order) and
    each receives as much of the remaining budget as its upper endpoint
    allows.  Works with ``float`` or ``Fraction`` values.
    """
    maximize = _is_max(mode)
    keys = list(row_closed)
    alpha = {k: row_closed[k].lep for k in keys}
    budget = 1 - sum(alpha.values(), ZERO)
    ordered = sorted(keys, key=lambda k: values[k], reverse=maximize)
    for k in ordered:
        if budget <= 0:
            break
        add = min(row_closed[k].rep - alpha[k], budget)
        alpha[k] += add
        budget -= add
    total = sum(alpha[k] * values[k] for k in keys) if keys else 0
    return total, alpha


def _is_max(mode) -> bool:
    if isinstance(mode, str):
        return mode.lower() == "max"
    return mode == Mode.MAX


# ------------------------------------------------------------- choice systems

@dataclass
class ChoiceSystem:
    states: List[Hashable]
    choices: List[List[IntervalDistribution]]
    labels: List[List[Hashable]] = field(default_factory=list)
    index: Dict[Hashable, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.index:
            self.index = {s: i for i, s in enumerate(self.states)}
        if not self.labels:
            self.labels = [[None] * len(c) for c in self.choices]

    @classmethod
    def from_imc(cls, imc) -> "ChoiceSystem":
        states = list(imc.states)
        return cls(states, [[imc.rows[s]] for s in states])

    @classmethod
    def from_imdp(cls, imdp) -> "ChoiceSystem":
        states = list(imdp.states)
        choices = [[imdp.rows[(s, a)] for a in imdp.actions[s]] for s in states]
        labels = [list(imdp.actions[s]) for s in states]
        return cls(states, choices, labels)

    def closed(self) -> "ChoiceSystem":
        return ChoiceSystem(self.states, [[close_intervals(r) for r in rows] for rows in self.choices],
                            self.labels, self.index)

    def target_indices(self, targets: Iterable[Hashable]) -> Set[int]:
        out = set()
        for t in targets:
            if t not in self.index:
                raise ModelError("TARGET_UNKNOWN_STATE", f"target {t} is not a state")
            out.add(self.index[t])
        return out

    def compile(self):
        """CSR arrays for the value-iteration kernel."""
        state_ptr = [0]
        choice_ptr = [0]
        col: List[int] = []
        lo: List[float] = []
        hi: List[float] = []
        for rows in self.choices:
            for row in rows:
                entries = sorted(((self.index[t], iv) for t, iv in row.items()), key=lambda e: e[0])
                for j, iv in entries:
                    col.append(j)
                    lo.append(float(iv.lep))
                    hi.append(float(iv.rep))
                choice_ptr.append(len(col))
            state_ptr.append(len(choice_ptr) - 1)
        return (np.asarray(state_ptr, dtype=np.int64), np.asarray(choice_ptr, dtype=np.int64),
                np.asarray(col, dtype=np.int64), np.asarray(lo, dtype=np.float64),
                np.asarray(hi, dtype=np.float64))


# ------------------------------------------------------- qualitative fixpoints

def _positive_predecessors(sys: ChoiceSystem) -> List[Set[int]]:
    pred: List[Set[int]] = [set() for _ in sys.states]
    for u, rows in enumerate(sys.choices):
        for row in rows:
            for t in assignably_positive(row):
                pred[sys.index[t]].add(u)
    return pred


def _backward(pred: List[Set[int]], seeds: Iterable[int], blocked: Set[int] = frozenset()) -> Set[int]:
    seen = set(seeds)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if u not in seen and u not in blocked:
                seen.add(u)
                queue.append(u)
    return seen


def forall0(sys: ChoiceSystem, T: Set[int]) -> Set[int]:
    # Plain rep > 0 would overcount: an entry with rep > 0 whose siblings'
    # lower endpoints already sum to one never carries mass.
    reach = _backward(_positive_predecessors(sys), T)
    return set(range(len(sys.states))) - reach


def exists0(sys: ChoiceSystem, T: Set[int]) -> Set[int]:
    U = set(range(len(sys.states))) - T
    changed = True
    while changed:
        keys = {sys.states[i] for i in U}
        drop = {u for u in U if not any(support_feasible(r, keys) for r in sys.choices[u])}
        changed = bool(drop)
        U -= drop
    return U


def exists1(sys: ChoiceSystem, T: Set[int]) -> Set[int]:
    n = len(sys.states)
    U = set(range(n))
    while True:
        keys = {sys.states[i] for i in U}
        # per (u, choice): is the choice usable inside U, and which successors can get mass
        hooks: List[Set[int]] = [set() for _ in range(n)]
        for u in U:
            for c, row in enumerate(sys.choices[u]):
                if not support_feasible(row, keys):
                    continue
                inside = IntervalDistribution({k: iv for k, iv in row.items() if k in keys})
                for t in assignably_positive(inside):
                    hooks[sys.index[t]].add(u)
        V = _backward(hooks, T & U)
        new_U = (T & U) | V
        if new_U == U:
            return U
        U = new_U


def forall1(sys: ChoiceSystem, T: Set[int]) -> Set[int]:
    E0 = exists0(sys, T)
    bad = _backward(_positive_predecessors(sys), E0, blocked=T)
    return T | (set(range(len(sys.states))) - bad)


_QUAL = {
    QualMode.FORALL0: forall0,
    QualMode.EXISTS0: exists0,
    QualMode.EXISTS1: exists1,
    QualMode.FORALL1: forall1,
}


def qual_indices(sys: ChoiceSystem, T: Set[int], mode) -> Set[int]:
    return _QUAL[QualMode(mode) if isinstance(mode, str) else mode](sys, T)


# ------------------------------------------------------------- quantitative

def quant_system(sys: ChoiceSystem, targets: Iterable[Hashable], cfg: SolveConfig,
                 record: bool = False) -> QuantResult:
    T = sys.target_indices(targets)
    closed = sys.closed()
    n = len(sys.states)
    if cfg.mode == Mode.MAX:
        zero = forall0(closed, T)
        # A closed row attains its supremum, so almost-sure reachability on the
        # closed system is exactly the set of states whose value is one.
        one = exists1(closed, T) | T
        start_rest = 0.0
    else:
        zero = exists0(closed, T)
        one = forall1(closed, T)
        # With the zero set fixed the minimum has a unique fixpoint, so the
        # iteration may start from above and decrease.
        start_rest = 1.0
    x = np.full(n, start_rest, dtype=np.float64)
    fixed = np.zeros(n, dtype=np.uint8)
    for i in one:
        x[i] = 1.0
        fixed[i] = 1
    for i in zero:
        x[i] = 0.0
        fixed[i] = 1
    arrays = closed.compile()
    maximize = cfg.mode == Mode.MAX
    trace = None
    if record:
        trace = [x.tolist()]
        iterations, converged = 0, False
        while iterations < cfg.max_iterations and not converged:
            _, converged = kernels.value_iteration(*arrays, x, fixed, maximize, cfg.epsilon, 1)
            iterations += 1
            trace.append(x.tolist())
    else:
        iterations, converged = kernels.value_iteration(*arrays, x, fixed, maximize, cfg.epsilon,
                                                        cfg.max_iterations)
    values = {s: float(min(1.0, max(0.0, x[i]))) for i, s in enumerate(sys.states)}
    return QuantResult(values, int(iterations), bool(converged),
                       {sys.states[i] for i in zero}, {sys.states[i] for i in one}, trace)


def solve_quant(imc, targets: Iterable[Hashable], cfg: SolveConfig = SolveConfig(),
                record: bool = False) -> QuantResult:
    return quant_system(ChoiceSystem.from_imc(imc), targets, cfg, record)


def solve_qual(imc, targets: Iterable[Hashable], mode) -> QualResult:
    sys = ChoiceSystem.from_imc(imc)
    mode = QualMode(mode) if isinstance(mode, str) else mode
    holds = qual_indices(sys, sys.target_indices(targets), mode)
    return QualResult(mode, {sys.states[i] for i in holds})


def solve_imdp_quant(imdp, targets, cfg: SolveConfig = SolveConfig()) -> QuantResult:
    """Robust value iteration directly on an IMDP (action choice plus assignment)."""
    return quant_system(ChoiceSystem.from_imdp(imdp), targets, cfg)


def solve_imdp_qual(imdp, targets, mode) -> QualResult:
    sys = ChoiceSystem.from_imdp(imdp)
    mode = QualMode(mode) if isinstance(mode, str) else mode
    holds = qual_indices(sys, sys.target_indices(targets), mode)
    return QualResult(mode, {sys.states[i] for i in holds})


# ------------------------------------------------------- exact policy check

def policy_value(sys: ChoiceSystem, targets: Iterable[Hashable], result: QuantResult, mode,
                 start: Hashable, limit: int = 2000) -> Optional[Fraction]:
    """Exact value of the memoryless policy that is greedy for ``result.values``.

    The policy picks, in every state, the best choice and its greedy vertex
    assignment on the closed rows.  Its exact value is a lower bound on the
    maximum (an upper bound on the minimum), which lets a threshold close to
    the float estimate be decided soundly in one direction.  Returns ``None``
    when the reachable chain has more than ``limit`` states.
    """
    maximize = _is_max(mode)
    closed = sys.closed()
    x = result.values
    pinned: Dict[Hashable, Fraction] = {}
    for s in result.exact_one:
        pinned[s] = Fraction(1)
    for s in result.exact_zero:
        pinned[s] = Fraction(0)
    for t in targets:
        pinned[t] = Fraction(1)
    chain: Dict[Hashable, Dict[Hashable, Fraction]] = {}
    queue = deque([start])
    seen = {start}
    while queue:
        s = queue.popleft()
        if s in pinned:
            continue
        best = None
        for row in closed.choices[sys.index[s]]:
            val, alpha = extremal_value(row, x, mode)
            if best is None or (val > best[0] if maximize else val < best[0]):
                best = (val, alpha)
        dist = {t: p for t, p in best[1].items() if p > 0}
        chain[s] = dist
        for t in dist:
            if t not in seen:
                if len(seen) >= limit:
                    return None
                seen.add(t)
                queue.append(t)
    if start in pinned:
        return pinned[start]
    # states that cannot reach a positive pinned state have value 0
    good = {s for s, v in pinned.items() if v > 0}
    rev: Dict[Hashable, Set[Hashable]] = {}
    for s, dist in chain.items():
        for t in dist:
            rev.setdefault(t, set()).add(s)
    alive = set()
    queue = deque(g for g in good if g in seen)
    alive.update(queue)
    while queue:
        v = queue.popleft()
        for u in rev.get(v, ()):
            if u not in alive:
                alive.add(u)
                queue.append(u)
    if start not in alive:
        return Fraction(0)
    unknown = [s for s in chain if s in alive]
    pos = {s: i for i, s in enumerate(unknown)}
    m = len(unknown)
    A = [[Fraction(0)] * (m + 1) for _ in range(m)]
    for s, i in pos.items():
        A[i][i] += 1
        for t, p in chain[s].items():
            if t in pos:
                A[i][pos[t]] -= p
            elif t in pinned:
                A[i][m] += p * pinned[t]
    return _gauss(A)[pos[start]]


def _gauss(A: List[List[Fraction]]) -> List[Fraction]:
    m = len(A)
    for c in range(m):
        p = next(r for r in range(c, m) if A[r][c] != 0)
        A[c], A[p] = A[p], A[c]
        inv = 1 / A[c][c]
        A[c] = [v * inv for v in A[c]]
        for r in range(m):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return [A[r][m] for r in range(m)]
