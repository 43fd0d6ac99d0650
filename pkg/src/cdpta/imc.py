"""Reduction of an interval MDP to an interval Markov chain.

Every IMDP state ``s`` becomes ``Base(s)``; every available action ``a``
becomes an intermediate state ``Pair(s, a)``.  ``Base(s)`` moves to each of
its pairs with interval ``[0,1]`` and ``Pair(s, a)`` carries the action's
interval distribution.  The text format written by :func:`dump_imc` is read
back by :func:`load_imc`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Tuple

from .intervals import IntervalDistribution, ProbInterval, parse_interval
from .imdp import (
    TAU,
    EdgeAction,
    EndpointIndicator,
    Imdp,
    IntervalB,
    RegionState,
)

FULL = ProbInterval.closed(0, 1)


@dataclass(frozen=True)
class Base:
    state: Hashable

    def __str__(self) -> str:
        return str(self.state)


@dataclass(frozen=True)
class Pair:
    state: Hashable
    action: Hashable

    def __str__(self) -> str:
        return f"({self.state},{self.action})"


@dataclass(frozen=True, eq=False)
class Imc:
    states: Tuple[Hashable, ...]
    rows: Mapping[Hashable, IntervalDistribution]
    initial: Optional[Hashable] = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Imc):
            return NotImplemented
        return (self.initial == other.initial and set(self.states) == set(other.states)
                and dict(self.rows) == dict(other.rows))

    def transition_count(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def targets_for(self, locations: Iterable[str]) -> set:
        """Lift a set of locations to the ``Base`` region states carrying them."""
        locations = set(locations)
        return {s for s in self.states
                if isinstance(s, Base) and isinstance(s.state, RegionState) and s.state.location in locations}


def reduce_to_imc(imdp: Imdp) -> Imc:
    states: List[Hashable] = [Base(s) for s in imdp.states]
    rows: Dict[Hashable, IntervalDistribution] = {}
    for s in imdp.states:
        pairs = [Pair(s, a) for a in imdp.actions[s]]
        states.extend(pairs)
        rows[Base(s)] = IntervalDistribution({p: FULL for p in pairs})
        for p in pairs:
            rows[p] = imdp.rows[(s, p.action)].rekey(Base)
    return Imc(tuple(states), rows, Base(imdp.initial))


def lift_targets(targets: Iterable[Hashable]) -> set:
    return {Base(t) for t in targets}


# ---------------------------------------------------------------- text format

IMC_HEADER = "# cdpta-imc v1"
IMDP_HEADER = "# cdpta-imdp v1"


def state_tokens(s) -> str:
    if isinstance(s, RegionState):
        return f"region {s.location} {s.B}"
    if isinstance(s, EndpointIndicator):
        return f"endpoint {s.B} {s.edge} {s.ep}"
    raise TypeError(f"cannot serialise state {s!r}")


def action_tokens(a) -> str:
    if a == TAU:
        return TAU
    return f"{a.B} {a.edge}"


def _read_state(tok: List[str], i: int):
    kind = tok[i]
    if kind == "region":
        return RegionState(tok[i + 1], IntervalB.parse(tok[i + 2])), i + 3
    if kind == "endpoint":
        return EndpointIndicator(IntervalB.parse(tok[i + 1]), tok[i + 2], tok[i + 3]), i + 4
    raise ValueError(f"unknown state kind {kind!r}")


def _read_action(tok: List[str], i: int):
    if tok[i] == TAU:
        return TAU, i + 1
    return EdgeAction(IntervalB.parse(tok[i]), tok[i + 1]), i + 2


def dump_imc(imc: Imc) -> str:
    index = {s: i for i, s in enumerate(imc.states)}
    out = [IMC_HEADER, f"states {len(imc.states)}"]
    if imc.initial is not None:
        out.append(f"initial {index[imc.initial]}")
    for s, i in index.items():
        if isinstance(s, Base):
            out.append(f"state {i} base {state_tokens(s.state)}")
        else:
            out.append(f"state {i} pair {state_tokens(s.state)} action {action_tokens(s.action)}")
    for s in imc.states:
        for t, iv in imc.rows[s].items():
            out.append(f"trans {index[s]} {index[t]} {iv}")
    return "\n".join(out) + "\n"


def load_imc(text: str) -> Imc:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != IMC_HEADER:
        raise ValueError("not a cdpta-imc v1 document")
    by_index: Dict[int, Hashable] = {}
    order: List[int] = []
    initial_idx = None
    trans: Dict[int, Dict[int, ProbInterval]] = {}
    for ln in lines[1:]:
        tok = ln.split()
        if tok[0] == "states":
            continue
        if tok[0] == "initial":
            initial_idx = int(tok[1])
        elif tok[0] == "state":
            idx = int(tok[1])
            if tok[2] == "base":
                st, _ = _read_state(tok, 3)
                by_index[idx] = Base(st)
            elif tok[2] == "pair":
                st, j = _read_state(tok, 3)
                if tok[j] != "action":
                    raise ValueError(f"malformed pair line: {ln!r}")
                act, _ = _read_action(tok, j + 1)
                by_index[idx] = Pair(st, act)
            else:
                raise ValueError(f"unknown state line: {ln!r}")
            order.append(idx)
        elif tok[0] == "trans":
            trans.setdefault(int(tok[1]), {})[int(tok[2])] = parse_interval(tok[3])
        elif not tok[0].startswith("#"):
            raise ValueError(f"unknown line: {ln!r}")
    rows = {by_index[i]: IntervalDistribution({by_index[j]: iv for j, iv in trans.get(i, {}).items()})
            for i in order}
    initial = by_index[initial_idx] if initial_idx is not None else None
    return Imc(tuple(by_index[i] for i in order), rows, initial)


def dump_imdp(imdp: Imdp) -> str:
    index = {s: i for i, s in enumerate(imdp.states)}
    out = [IMDP_HEADER, f"states {len(imdp.states)}", f"initial {index[imdp.initial]}"]
    for s, i in index.items():
        out.append(f"state {i} {state_tokens(s)}")
    for s in imdp.states:
        for a in imdp.actions[s]:
            out.append(f"action {index[s]} {action_tokens(a)}")
            for t, iv in imdp.rows[(s, a)].items():
                out.append(f"trans {index[s]} {index[t]} {iv} {action_tokens(a)}")
    return "\n".join(out) + "\n"


def load_imdp(text: str) -> Imdp:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != IMDP_HEADER:
        raise ValueError("not a cdpta-imdp v1 document")
    by_index, order = {}, []
    actions: Dict[Hashable, List] = {}
    rows: Dict[Tuple, Dict] = {}
    initial_idx = None
    for ln in lines[1:]:
        tok = ln.split()
        if tok[0] == "initial":
            initial_idx = int(tok[1])
        elif tok[0] == "state":
            by_index[int(tok[1])], _ = _read_state(tok, 2)
            order.append(int(tok[1]))
        elif tok[0] == "action":
            s = by_index[int(tok[1])]
            a, _ = _read_action(tok, 2)
            actions.setdefault(s, []).append(a)
            rows.setdefault((s, a), {})
        elif tok[0] == "trans":
            s, t = by_index[int(tok[1])], by_index[int(tok[2])]
            a, _ = _read_action(tok, 4)
            rows.setdefault((s, a), {})[t] = parse_interval(tok[3])
    return Imdp(
        tuple(by_index[i] for i in order),
        {s: tuple(a) for s, a in actions.items()},
        {k: IntervalDistribution(v) for k, v in rows.items()},
        by_index[initial_idx],
    )


def imc_to_dot(imc: Imc) -> str:
    """Graphviz rendering with base states as circles and pair states as boxes."""
    ids = {s: f"s{i}" for i, s in enumerate(imc.states)}
    lines = ["digraph imc {", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for s in imc.states:
        shape = "ellipse" if isinstance(s, Base) else "box"
        label = str(s).replace('"', r'\"')
        extra = ", penwidth=2" if s == imc.initial else ""
        lines.append(f'  {ids[s]} [label="{label}", shape={shape}{extra}];')
    for s in imc.states:
        for t, iv in imc.rows[s].items():
            lines.append(f'  {ids[s]} -> {ids[t]} [label="{iv}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
