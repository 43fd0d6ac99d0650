"""Region / endpoint-indicator interval MDP of a validated model."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Dict, List, Mapping, Tuple, Union

from .intervals import IntervalDistribution, ProbInterval, is_interval_distribution
from .model import Cdpta, ClockConstraint, InvariantSpec, ModelError, ProbEdge, validate

LE, RE = "le", "re"


@total_ordering
@dataclass(frozen=True)
class IntervalB:
    """A cell of the partition: the point ``[lo,lo]`` or the open ``(lo,hi)``."""

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError("lo > hi")

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def _key(self):
        return (self.lo, 0 if self.is_point else 1)

    def __lt__(self, other: "IntervalB") -> bool:
        return self._key() < other._key()

    def le(self) -> int:
        return self.lo

    def re(self) -> int:
        return self.hi

    def endpoint(self, ep: str) -> int:
        return self.lo if ep == LE else self.hi

    def __contains__(self, v) -> bool:
        return v == self.lo if self.is_point else self.lo < v < self.hi

    def __str__(self) -> str:
        if self.is_point:
            return f"[{self.lo},{self.lo}]"
        return f"({self.lo},{self.hi})"

    def __repr__(self) -> str:
        return f"IntervalB{self}"

    @classmethod
    def parse(cls, text: str) -> "IntervalB":
        body = text.strip()
        lo, hi = (int(t) for t in body[1:-1].split(","))
        if body[0] == "[" and lo != hi:
            raise ValueError(f"closed partition cells are points: {text!r}")
        return cls(lo, hi)


@dataclass(frozen=True)
class RegionState:
    location: str
    B: IntervalB

    def __str__(self) -> str:
        return f"({self.location},{self.B})"


@dataclass(frozen=True)
class EndpointIndicator:
    B: IntervalB
    edge: str
    ep: str

    def __str__(self) -> str:
        return f"({self.B},{self.edge},{self.ep})"


@dataclass(frozen=True)
class EdgeAction:
    B: IntervalB
    edge: str

    def __str__(self) -> str:
        return f"({self.B},{self.edge})"


TAU = "tau"

ImdpState = Union[RegionState, EndpointIndicator]
ImdpAction = Union[EdgeAction, str]


def boundary_set(model: Cdpta) -> Tuple[int, ...]:
    return tuple(sorted(model.constants() | {0}))


def interval_partition(bounds) -> List[IntervalB]:
    bounds = list(bounds)
    if not bounds or bounds[0] != 0 or sorted(set(bounds)) != bounds:
        raise ValueError("bounds must be sorted, distinct and start at 0")
    out = [IntervalB(bounds[0], bounds[0])]
    for a, b in zip(bounds, bounds[1:]):
        out.append(IntervalB(a, b))
        out.append(IntervalB(b, b))
    return out


class Partition:
    """The ordered cells for a boundary set, with valuation lookup."""

    def __init__(self, bounds) -> None:
        self.bounds = tuple(bounds)
        self.cells = interval_partition(self.bounds)

    def locate(self, v) -> IntervalB:
        """The cell containing ``v``; valuations beyond the last bound are rejected."""
        i = bisect.bisect_left(self.bounds, v)
        if i < len(self.bounds) and self.bounds[i] == v:
            return self.cells[2 * i]
        if i == 0 or i == len(self.bounds):
            raise ValueError(f"valuation {v} lies outside [0,{self.bounds[-1]}]")
        return self.cells[2 * i - 1]

    def index(self, B: IntervalB) -> int:
        return self.cells.index(B)

    def __len__(self) -> int:
        return len(self.cells)


def interval_sat(B: IntervalB, psi: Union[ClockConstraint, InvariantSpec]) -> bool:
    """All valuations of ``B`` satisfy ``psi``; decided on the cell's endpoints."""
    if isinstance(psi, InvariantSpec):
        psi = psi.as_constraint()
    for a in psi.atoms:
        c = a.bound
        if a.rel == "<":
            ok = B.hi < c or (not B.is_point and B.hi == c)
        elif a.rel == "<=":
            ok = B.hi <= c
        elif a.rel == ">":
            ok = B.lo > c or (not B.is_point and B.lo == c)
        else:
            ok = B.lo >= c
        if not ok:
            return False
    return True


def edge_enabled_on(B: IntervalB, edge: ProbEdge, model: Cdpta) -> bool:
    return interval_sat(B, edge.guard) and interval_sat(B, model.locations[edge.source])


def endpoint_target_prob(model: Cdpta, indicator: EndpointIndicator, target: RegionState) -> Fraction:
    edge = model.edge(indicator.edge)
    B_hat = indicator.B
    v_star = B_hat.endpoint(indicator.ep)
    zero = IntervalB(0, 0)

    def mass(reset: bool) -> Fraction:
        return sum((o.expr(v_star) for o in edge.outcomes if o.reset == reset and o.target == target.location),
                   Fraction(0))

    if target.B == B_hat == zero:
        return mass(True) + mass(False)
    if target.B == B_hat:
        return mass(False)
    if target.B == zero and B_hat > zero:
        return mass(True)
    return Fraction(0)


def valuation_to_assignment(B_hat: IntervalB, v_hat) -> Dict[str, Fraction]:
    v_hat = Fraction(v_hat)
    if B_hat.is_point or not (B_hat.lo < v_hat < B_hat.hi):
        raise ModelError("OUT_OF_INTERVAL", f"{v_hat} is not inside the open cell {B_hat}")
    width = B_hat.hi - B_hat.lo
    return {LE: (B_hat.hi - v_hat) / width, RE: (v_hat - B_hat.lo) / width}


def assignment_to_valuation(B_hat: IntervalB, alpha: Mapping[str, Fraction]) -> Fraction:
    if B_hat.is_point:
        raise ModelError("DEGENERATE", f"{B_hat} is a point cell")
    a_le, a_re = Fraction(alpha.get(LE, 0)), Fraction(alpha.get(RE, 0))
    if a_le + a_re != 1 or not (0 < a_le < 1):
        raise ModelError("DEGENERATE", f"assignment {a_le}, {a_re} does not pick an interior valuation")
    return B_hat.hi - a_le * (B_hat.hi - B_hat.lo)


REGION_ROW = ProbInterval.open(0, 1)


@dataclass(frozen=True, eq=False)
class Imdp:
    states: Tuple[ImdpState, ...]
    actions: Mapping[ImdpState, Tuple[ImdpAction, ...]]
    rows: Mapping[Tuple[ImdpState, ImdpAction], IntervalDistribution]
    initial: ImdpState

    def row(self, state, action) -> IntervalDistribution:
        return self.rows[(state, action)]

    @property
    def regions(self) -> List[RegionState]:
        return [s for s in self.states if isinstance(s, RegionState)]

    @property
    def indicators(self) -> List[EndpointIndicator]:
        return [s for s in self.states if isinstance(s, EndpointIndicator)]

    def transition_count(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def targets_for(self, locations) -> set:
        locations = set(locations)
        return {s for s in self.states if isinstance(s, RegionState) and s.location in locations}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Imdp):
            return NotImplemented
        return (self.initial == other.initial and set(self.states) == set(other.states)
                and {k: set(v) for k, v in self.actions.items()} == {k: set(v) for k, v in other.actions.items()}
                and dict(self.rows) == dict(other.rows))


def build_imdp(model: Cdpta, check: bool = True) -> Imdp:
    if check:
        report = validate(model)
        if not report.ok:
            raise ModelError("INVALID_MODEL", str(report))
    part = Partition(boundary_set(model))
    edges = sorted(model.edges, key=lambda e: e.id)
    regions = [RegionState(l, B) for l in sorted(model.locations) for B in part.cells
               if interval_sat(B, model.locations[l])]
    region_set = set(regions)
    enabled = {e.id: [B for B in part.cells if edge_enabled_on(B, e, model)] for e in edges}
    indicators = [EndpointIndicator(B, e.id, ep) for B in part.cells for e in edges
                  if B in enabled[e.id] for ep in (LE, RE)]

    actions: Dict[ImdpState, Tuple[ImdpAction, ...]] = {}
    rows: Dict[Tuple[ImdpState, ImdpAction], IntervalDistribution] = {}
    for r in regions:
        acts = []
        for e in edges:
            if e.source != r.location:
                continue
            for B_hat in enabled[e.id]:
                if B_hat >= r.B:
                    a = EdgeAction(B_hat, e.id)
                    acts.append(a)
                    rows[(r, a)] = IntervalDistribution({
                        EndpointIndicator(B_hat, e.id, LE): REGION_ROW,
                        EndpointIndicator(B_hat, e.id, RE): REGION_ROW,
                    })
        if not acts:
            raise ModelError("ASSUMPTION_BROKEN", f"region {r} has no available action")
        actions[r] = tuple(acts)

    for ind in indicators:
        edge = model.edge(ind.edge)
        entries = {}
        candidates = {RegionState(o.target, B) for o in edge.outcomes for B in (IntervalB(0, 0), ind.B)}
        for t in sorted(candidates, key=lambda s: (s.location, s.B)):
            q = endpoint_target_prob(model, ind, t)
            if q == 0:
                continue
            if t not in region_set:
                raise ModelError("ASSUMPTION_BROKEN", f"{ind} moves mass {q} to non-state {t}")
            entries[t] = ProbInterval.point(q)
        row = IntervalDistribution(entries)
        if sum(iv.lep for iv in row.values()) != 1:
            raise ModelError("ASSUMPTION_BROKEN", f"row of {ind} does not sum to 1")
        actions[ind] = (TAU,)
        rows[(ind, TAU)] = row

    initial = RegionState(model.initial, IntervalB(0, 0))
    if initial not in region_set:
        raise ModelError("ASSUMPTION_BROKEN", "initial region is not a state")
    imdp = Imdp(tuple(regions) + tuple(indicators), actions, rows, initial)
    assert all(is_interval_distribution(row) for row in rows.values())
    return imdp


def expected_sizes(model: Cdpta) -> Tuple[int, int]:
    """Closed-form region and endpoint-indicator counts from cell indices alone."""
    bounds = boundary_set(model)
    pos = {b: i for i, b in enumerate(bounds)}
    n_regions = 0
    for inv in model.locations.values():
        # cells inside [0,c] number 2*idx(c)+1; [0,c) drops the point [c,c]
        n_regions += 2 * pos[inv.bound] + (0 if inv.strict else 1)
    n_ind = 0
    for e in model.edges:
        n_ind += 2 * _cells_in_interval(e, model, bounds, pos)
    return n_regions, n_ind


def _cells_in_interval(edge: ProbEdge, model: Cdpta, bounds, pos) -> int:
    from .model import enabled_interval

    iv = enabled_interval(edge, model)
    if iv is None:
        return 0
    lo, hi = 2 * pos[int(iv.lo)], 2 * pos[int(iv.hi)]
    if iv.lo_open:
        lo += 1
    if iv.hi_open:
        hi -= 1
    return max(hi - lo + 1, 0)


def _dot_quote(s: str) -> str:
    return '"' + s.replace('"', r'\"') + '"'


def imdp_to_dot(imdp: Imdp, show_zero: bool = False) -> str:
    """Graphviz rendering: regions as boxes, endpoint indicators shaded, one
    black point per region action."""
    lines = ["digraph imdp {", "  rankdir=TB;", '  node [fontname="Helvetica"];']
    ids = {s: f"s{i}" for i, s in enumerate(imdp.states)}
    for s in imdp.states:
        style = 'shape=box, style="rounded"' if isinstance(s, RegionState) else \
            'shape=box, style="rounded,filled", fillcolor=gray90'
        extra = ", penwidth=2" if s == imdp.initial else ""
        lines.append(f"  {ids[s]} [label={_dot_quote(str(s))}, {style}{extra}];")
    n = 0
    for s in imdp.states:
        for a in imdp.actions[s]:
            row = imdp.rows[(s, a)]
            if a == TAU:
                for t, iv in row.items():
                    lines.append(f"  {ids[s]} -> {ids[t]} [label={_dot_quote(str(iv))}];")
                if show_zero:
                    for t in _zero_targets(imdp, s, row):
                        lines.append(f'  {ids[s]} -> {ids[t]} [label="[0,0]", style=dashed];')
                continue
            nail = f"a{n}"
            n += 1
            lines.append(f"  {nail} [shape=point, width=0.08, label=\"\"];")
            lines.append(f"  {ids[s]} -> {nail} [label={_dot_quote(str(a))}, arrowhead=none];")
            for t, iv in row.items():
                lines.append(f"  {nail} -> {ids[t]} [label={_dot_quote(str(iv))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _zero_targets(imdp: Imdp, ind: EndpointIndicator, row) -> List[RegionState]:
    # regions the other endpoint of the same cell reaches but this one does not
    twin = EndpointIndicator(ind.B, ind.edge, RE if ind.ep == LE else LE)
    other = imdp.rows.get((twin, TAU), {})
    return [t for t in other if t not in row]
