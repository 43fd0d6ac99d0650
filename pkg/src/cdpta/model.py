"""One-clock clock-dependent probabilistic timed automata.

Syntax, exact evaluation of guards and affine distribution templates, the
structural well-formedness checks and the initialisation check.  All
arithmetic is done on :class:`fractions.Fraction`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

Number = Union[int, Fraction]

RELATIONS = ("<", "<=", ">=", ">")


class ModelError(ValueError):
    """Raised on misuse of the model API; ``code`` names the failed check."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class Atom:
    rel: str
    bound: int

    def __post_init__(self) -> None:
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")
        if not isinstance(self.bound, int) or self.bound < 0:
            raise ValueError(f"clock bound must be a natural number, got {self.bound!r}")

    def holds(self, v: Number) -> bool:
        if self.rel == "<":
            return v < self.bound
        if self.rel == "<=":
            return v <= self.bound
        if self.rel == ">=":
            return v >= self.bound
        return v > self.bound

    def __str__(self) -> str:
        return f"x {self.rel} {self.bound}"


@dataclass(frozen=True)
class ClockConstraint:
    """Conjunction of atoms over the single clock; empty means ``true``."""

    atoms: Tuple[Atom, ...] = ()

    @classmethod
    def of(cls, *atoms: Tuple[str, int]) -> "ClockConstraint":
        return cls(tuple(Atom(r, b) for r, b in atoms))

    def constants(self) -> set:
        return {a.bound for a in self.atoms}

    def __str__(self) -> str:
        if not self.atoms:
            return "true"
        return " && ".join(str(a) for a in self.atoms)


TRUE = ClockConstraint()


@dataclass(frozen=True)
class InvariantSpec:
    """Location invariant ``x < bound`` (strict) or ``x <= bound``."""

    strict: bool
    bound: int

    def holds(self, v: Number) -> bool:
        return v < self.bound if self.strict else v <= self.bound

    def as_constraint(self) -> ClockConstraint:
        return ClockConstraint((Atom("<" if self.strict else "<=", self.bound),))

    def __str__(self) -> str:
        return f"x {'<' if self.strict else '<='} {self.bound}"


@dataclass(frozen=True)
class AffineExpr:
    """The map ``v -> c + d*v``."""

    c: Fraction = Fraction(0)
    d: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "d", Fraction(self.d))

    def __call__(self, v: Number) -> Fraction:
        return self.c + self.d * v


@dataclass(frozen=True)
class Outcome:
    reset: bool
    target: str
    expr: AffineExpr

    @property
    def key(self) -> Tuple[bool, str]:
        return (self.reset, self.target)


@dataclass(frozen=True)
class ProbEdge:
    id: str
    source: str
    guard: ClockConstraint
    outcomes: Tuple[Outcome, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if not self.outcomes:
            raise ValueError(f"edge {self.id!r} has no outcomes")
        keys = [o.key for o in self.outcomes]
        if len(set(keys)) != len(keys):
            raise ValueError(f"edge {self.id!r} repeats a (reset, target) outcome")

    @property
    def is_constant(self) -> bool:
        return all(o.expr.d == 0 for o in self.outcomes)


@dataclass(frozen=True, eq=False)
class Cdpta:
    locations: Mapping[str, InvariantSpec]
    edges: Tuple[ProbEdge, ...]
    initial: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "locations", dict(self.locations))
        object.__setattr__(self, "edges", tuple(self.edges))
        if self.initial not in self.locations:
            raise ValueError(f"initial location {self.initial!r} is not declared")
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise ValueError("edge ids must be unique")
        for e in self.edges:
            if e.source not in self.locations:
                raise ValueError(f"edge {e.id!r}: unknown source {e.source!r}")
            for o in e.outcomes:
                if o.target not in self.locations:
                    raise ValueError(f"edge {e.id!r}: unknown target {o.target!r}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cdpta):
            return NotImplemented
        return (
            self.initial == other.initial
            and self.locations == other.locations
            and {e.id: e for e in self.edges} == {e.id: e for e in other.edges}
        )

    def __hash__(self) -> int:
        return hash((self.initial, frozenset(self.locations.items()), frozenset(self.edges)))

    def edge(self, edge_id: str) -> ProbEdge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    def edges_from(self, location: str) -> Tuple[ProbEdge, ...]:
        return tuple(e for e in self.edges if e.source == location)

    def constants(self) -> set:
        out = {inv.bound for inv in self.locations.values()}
        for e in self.edges:
            out |= e.guard.constants()
        return out


@dataclass(frozen=True)
class ClockInterval:
    """An interval of clock valuations; ``hi=None`` stands for +infinity."""

    lo: Fraction
    hi: Optional[Fraction]
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", Fraction(self.lo))
        if self.hi is not None:
            object.__setattr__(self, "hi", Fraction(self.hi))
        else:
            object.__setattr__(self, "hi_open", True)

    @property
    def is_empty(self) -> bool:
        if self.hi is None:
            return False
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_open or self.hi_open)

    @property
    def is_point(self) -> bool:
        return not self.is_empty and self.lo == self.hi

    def __contains__(self, v: Number) -> bool:
        if v < self.lo or (self.lo_open and v == self.lo):
            return False
        if self.hi is None:
            return True
        return v < self.hi or (not self.hi_open and v == self.hi)

    def intersect(self, other: "ClockInterval") -> "ClockInterval":
        if self.lo > other.lo:
            lo, lo_open = self.lo, self.lo_open
        elif other.lo > self.lo:
            lo, lo_open = other.lo, other.lo_open
        else:
            lo, lo_open = self.lo, self.lo_open or other.lo_open
        if self.hi is None:
            hi, hi_open = other.hi, other.hi_open
        elif other.hi is None or self.hi < other.hi:
            hi, hi_open = self.hi, self.hi_open
        elif other.hi < self.hi:
            hi, hi_open = other.hi, other.hi_open
        else:
            hi, hi_open = self.hi, self.hi_open or other.hi_open
        return ClockInterval(lo, hi, lo_open, hi_open)

    def contains_interval(self, other: "ClockInterval") -> bool:
        """True iff ``other`` is a subset of this interval (empty sets included)."""
        if other.is_empty:
            return True
        if other.lo < self.lo or (other.lo == self.lo and self.lo_open and not other.lo_open):
            return False
        if self.hi is None:
            return True
        if other.hi is None or other.hi > self.hi:
            return False
        return not (other.hi == self.hi and self.hi_open and not other.hi_open)

    def __str__(self) -> str:
        if self.is_empty:
            return "EMPTY"
        hi = "inf" if self.hi is None else str(self.hi)
        return f"{'(' if self.lo_open else '['}{self.lo},{hi}{')' if self.hi_open else ']'}"


NONNEGATIVE = ClockInterval(Fraction(0), None)


def constraint_interval(psi: Union[ClockConstraint, InvariantSpec]) -> ClockInterval:
    """The satisfaction set of a constraint within the non-negative reals."""
    if isinstance(psi, InvariantSpec):
        psi = psi.as_constraint()
    out = NONNEGATIVE
    for a in psi.atoms:
        b = Fraction(a.bound)
        if a.rel == "<":
            half = ClockInterval(Fraction(0), b, False, True)
        elif a.rel == "<=":
            half = ClockInterval(Fraction(0), b, False, False)
        elif a.rel == ">":
            half = ClockInterval(b, None, True)
        else:
            half = ClockInterval(b, None, False)
        out = out.intersect(half)
    return out


def eval_constraint(psi: ClockConstraint, v: Number) -> bool:
    if v < 0:
        raise ModelError("PRE_VIOLATION", f"negative clock valuation {v}")
    return all(a.holds(v) for a in psi.atoms)


def enabled_interval(edge: ProbEdge, model: Cdpta) -> Optional[ClockInterval]:
    """Valuations satisfying the guard and the source invariant, or None if empty."""
    inv = model.locations[edge.source]
    iv = constraint_interval(edge.guard).intersect(constraint_interval(inv))
    return None if iv.is_empty else iv


def closure(iv: ClockInterval) -> ClockInterval:
    return ClockInterval(iv.lo, iv.hi, False, iv.hi is None)


def template_eval(edge: ProbEdge, outcome: Outcome, v: Number, model: Cdpta) -> Fraction:
    iv = enabled_interval(edge, model)
    if iv is None or v not in closure(iv):
        raise ModelError("OUT_OF_DOMAIN", f"{v} is outside the closure of the enabled interval of {edge.id}")
    return outcome.expr(v)


def positive_everywhere(expr: AffineExpr, iv: ClockInterval) -> bool:
    """Exact test that ``expr > 0`` at every point of a bounded, non-empty interval."""
    lo_val, hi_val = expr(iv.lo), expr(iv.hi)
    if iv.is_point:
        return lo_val > 0
    for val, is_open in ((lo_val, iv.lo_open), (hi_val, iv.hi_open)):
        if val < 0 or (val == 0 and not is_open):
            return False
    return lo_val > 0 or hi_val > 0


def _positive_part(expr: AffineExpr, iv: ClockInterval) -> ClockInterval:
    """The sub-interval of ``iv`` on which ``expr`` is strictly positive."""
    if expr.d == 0:
        return iv if expr.c > 0 else ClockInterval(Fraction(1), Fraction(0))
    root = -expr.c / expr.d
    if expr.d > 0:
        half = ClockInterval(max(root, Fraction(0)), None, root >= 0)
    else:
        half = ClockInterval(Fraction(0), root, False, True)
    return iv.intersect(half)


@dataclass(frozen=True)
class Violation:
    code: str
    ref: str
    message: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    witness: Optional[list] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, ref: str, message: str) -> None:
        self.violations.append(Violation(code, ref, message))

    def codes(self) -> set:
        return {v.code for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"{v.code} [{v.ref}]: {v.message}" for v in self.violations)


def validate(model: Cdpta) -> ValidationReport:
    report = ValidationReport()
    intervals = {}

    for name, inv in sorted(model.locations.items()):
        if inv.strict and inv.bound < 1:
            report.add("INV_SHAPE", name, f"invariant {inv} needs a positive bound")
            continue
        if inv.strict:
            tail = ClockInterval(Fraction(inv.bound - 1), Fraction(inv.bound), True, True)
            ok = any(constraint_interval(e.guard).contains_interval(tail) for e in model.edges_from(name))
            need = f"({inv.bound - 1},{inv.bound})"
        else:
            ok = any(eval_constraint(e.guard, inv.bound) for e in model.edges_from(name))
            need = str(inv.bound)
        if not ok:
            report.add("NO_ENABLED_EDGE", name, f"no edge from {name} is enabled on {need}")

    for e in model.edges:
        iv = enabled_interval(e, model)
        if iv is None:
            report.add("EMPTY_GUARD", e.id, f"guard {e.guard} is unsatisfiable under inv({e.source})")
            continue
        intervals[e.id] = iv
        lo, hi = iv.lo, iv.hi
        for o in e.outcomes:
            if o.expr(lo) < 0 or o.expr(hi) < 0:
                report.add("AFFINE_NEGATIVE", e.id, f"outcome to {o.target} is negative on [{lo},{hi}]")
            if not o.reset:
                pos = _positive_part(o.expr, iv)
                inv_t = constraint_interval(model.locations[o.target])
                if not inv_t.contains_interval(pos):
                    report.add(
                        "TARGET_INVARIANT", e.id,
                        f"outcome to {o.target} has positive mass on {pos} outside inv({o.target})",
                    )
        if iv.is_point:
            total = sum(o.expr(lo) for o in e.outcomes)
            if total != 1:
                report.add("AFFINE_SUM", e.id, f"outcomes sum to {total} at x = {lo}")
        else:
            sc = sum(o.expr.c for o in e.outcomes)
            sd = sum(o.expr.d for o in e.outcomes)
            if sc != 1 or sd != 0:
                report.add("AFFINE_SUM", e.id, f"outcomes sum to {sc} + {sd}*x, expected 1")

    if not (report.codes() & {"EMPTY_GUARD", "AFFINE_SUM", "AFFINE_NEGATIVE"}):
        witness = check_initialised(model)
        if witness is not None:
            report.witness = witness
            report.add("NOT_INITIALISED", " -> ".join(witness),
                       "non-constant edges linked by a fragment without reset or pinned clock value")
    return report


def initialisation_graph(model: Cdpta) -> dict:
    """Arcs p -> p' of the initialisation check, keyed by edge id."""
    iv = {e.id: enabled_interval(e, model) for e in model.edges}
    succ = {e.id: [] for e in model.edges}
    for p in model.edges:
        ip = iv[p.id]
        if ip is None:
            continue
        for o in p.outcomes:
            if o.reset or not positive_everywhere(o.expr, ip):
                continue
            for q in model.edges_from(o.target):
                iq = iv[q.id]
                if iq is None:
                    continue
                overlap = ip.intersect(iq)
                if not overlap.is_empty and not overlap.is_point and q.id not in succ[p.id]:
                    succ[p.id].append(q.id)
    return succ


def check_initialised(model: Cdpta) -> Optional[list]:
    """None if initialised, else a shortest violating fragment as a list of edge ids."""
    succ = initialisation_graph(model)
    nonconst = {e.id for e in model.edges if not e.is_constant}
    for start in (e.id for e in model.edges if e.id in nonconst):
        parent = {}
        queue = deque([start])
        seen = set()
        while queue:
            cur = queue.popleft()
            for nxt in succ[cur]:
                if nxt in seen:
                    continue
                seen.add(nxt)
                parent[nxt] = cur
                if nxt in nonconst:
                    path = [nxt]
                    node = cur
                    while node != start:
                        path.append(node)
                        node = parent[node]
                    path.append(start)
                    return path[::-1]
                queue.append(nxt)
    return None


def transition_distribution(
    model: Cdpta, state: Tuple[str, Number], move: Tuple[Number, ProbEdge]
) -> dict:
    """Successor distribution of a timed move (delay to ``v_hat``, then take ``edge``)."""
    loc, v = state
    v_hat, edge = move
    v, v_hat = Fraction(v), Fraction(v_hat)
    if edge.source != loc:
        raise ModelError("PRE_VIOLATION", f"edge {edge.id} does not leave {loc}")
    if v < 0 or not model.locations[loc].holds(v):
        raise ModelError("PRE_VIOLATION", f"({loc},{v}) violates inv({loc})")
    if v_hat < v:
        raise ModelError("PRE_VIOLATION", f"delay target {v_hat} is below current valuation {v}")
    if not (eval_constraint(edge.guard, v_hat) and model.locations[loc].holds(v_hat)):
        raise ModelError("PRE_VIOLATION", f"edge {edge.id} is not enabled at {v_hat}")
    dist: dict = {}
    for o in edge.outcomes:
        p = o.expr(v_hat)
        if p == 0:
            continue
        succ = (o.target, Fraction(0) if o.reset else v_hat)
        dist[succ] = dist.get(succ, Fraction(0)) + p
    return {k: p for k, p in dist.items() if p != 0}


def make_edge(
    edge_id: str,
    source: str,
    guard: Iterable[Tuple[str, int]],
    outcomes: Sequence[Tuple[str, bool, Number, Number]],
) -> ProbEdge:
    """Shorthand: outcomes are ``(target, reset, c, d)`` tuples."""
    return ProbEdge(
        edge_id,
        source,
        ClockConstraint.of(*guard),
        tuple(Outcome(r, t, AffineExpr(Fraction(c), Fraction(d))) for t, r, c, d in outcomes),
    )
