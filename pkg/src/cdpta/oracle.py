"""Independent checks of the abstraction.

* A discretised finite MDP of a cdPTA on the grid ``2**-k`` with standard
  value iteration, both as an explicit :class:`FiniteMdp` (small ``k``) and
  through a structured Bellman operator that scales to ``k = 10``.
* Finite table schedulers keyed by B-paths, exact bounded-horizon
  reachability under such schedulers on the cdPTA and on its IMDP, and the
  translation of a B-minimal cdPTA scheduler into an IMDP scheduler.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .imdp import (
    LE,
    RE,
    TAU,
    EdgeAction,
    EndpointIndicator,
    Imdp,
    IntervalB,
    Partition,
    RegionState,
    boundary_set,
    edge_enabled_on,
    valuation_to_assignment,
)
from .intervals import is_assignment
from .model import Cdpta, ModelError, eval_constraint, transition_distribution

HALF = Fraction(1, 2)


# ------------------------------------------------------------ finite MDPs

@dataclass
class FiniteMdp:
    states: List[Hashable]
    actions: Dict[Hashable, List[Hashable]]
    rows: Dict[Tuple[Hashable, Hashable], Dict[Hashable, Fraction]]

    def __post_init__(self) -> None:
        for s in self.states:
            if not self.actions.get(s):
                raise ValueError(f"state {s!r} has no action")

    def row(self, s, a) -> Dict[Hashable, Fraction]:
        return self.rows[(s, a)]


def _prob0_max(mdp: FiniteMdp, targets: Set) -> Set:
    """States from which no scheduler reaches the targets."""
    pred: Dict[Hashable, Set] = {}
    for (s, _), row in mdp.rows.items():
        for t in row:
            pred.setdefault(t, set()).add(s)
    seen = set(t for t in targets if t in mdp.actions)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for u in pred.get(v, ()):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return set(mdp.states) - seen


def _prob0_min(mdp: FiniteMdp, targets: Set) -> Set:
    """States with a scheduler that avoids the targets forever."""
    U = set(mdp.states) - set(targets)
    changed = True
    while changed:
        drop = {u for u in U if not any(set(mdp.rows[(u, a)]) <= U for a in mdp.actions[u])}
        U -= drop
        changed = bool(drop)
    return U


def mdp_reach(mdp: FiniteMdp, targets: Iterable[Hashable], mode: str = "max",
              epsilon: float = 1e-9, max_iterations: int = 10**6) -> Dict[Hashable, float]:
    """Extremal reachability probabilities by value iteration.

    MAX iterates upward from zero with the never-reachable states pinned to
    zero; MIN iterates downward from one with the avoidable states pinned.
    """
    targets = set(targets)
    maximize = mode.lower() == "max"
    zero = _prob0_max(mdp, targets) if maximize else _prob0_min(mdp, targets)
    idx = {s: i for i, s in enumerate(mdp.states)}
    x = np.full(len(idx), 0.0 if maximize else 1.0)
    fixed = np.zeros(len(idx), dtype=bool)
    for s in targets:
        if s in idx:
            x[idx[s]] = 1.0
            fixed[idx[s]] = True
    for s in zero:
        x[idx[s]] = 0.0
        fixed[idx[s]] = True
    rows = [[[(idx[t], float(p)) for t, p in mdp.rows[(s, a)].items()] for a in mdp.actions[s]]
            for s in mdp.states]
    opt = max if maximize else min
    for _ in range(max_iterations):
        y = x.copy()
        for i, choices in enumerate(rows):
            if not fixed[i]:
                y[i] = opt(sum(p * x[j] for j, p in row) for row in choices)
        delta = float(np.max(np.abs(y - x))) if len(x) else 0.0
        x = y
        if delta < epsilon:
            break
    return {s: float(x[i]) for s, i in idx.items()}


# ---------------------------------------------------------- discretisation

def grid_points(model: Cdpta, k: int) -> List[Fraction]:
    if k < 1:
        raise ValueError("discretisation level k must be at least 1")
    top = max(boundary_set(model))
    step = Fraction(1, 2**k)
    return [i * step for i in range(top * 2**k + 1)]


def discretize(model: Cdpta, k: int) -> FiniteMdp:
    """Explicit grid MDP: states ``(l, v)``, actions ``(v_hat, edge id)``."""
    grid = grid_points(model, k)
    states = [(l, v) for l in sorted(model.locations) for v in grid if model.locations[l].holds(v)]
    actions: Dict[Hashable, List[Hashable]] = {}
    rows: Dict[Tuple[Hashable, Hashable], Dict[Hashable, Fraction]] = {}
    enabled = {e.id: [w for w in grid if eval_constraint(e.guard, w) and model.locations[e.source].holds(w)]
               for e in model.edges}
    for s in states:
        loc, v = s
        acts = []
        for e in model.edges_from(loc):
            for w in enabled[e.id]:
                if w >= v:
                    a = (w, e.id)
                    acts.append(a)
                    rows[(s, a)] = transition_distribution(model, s, (w, e))
        actions[s] = acts
    return FiniteMdp(states, actions, rows)


class GridReach:
    """Structured value iteration on the grid MDP.

    The value of taking edge ``p`` at grid point ``j`` does not depend on the
    valuation the delay started from, so a state's value is an extremum of a
    suffix of the per-edge action values.  This keeps the cost per sweep
    linear in the grid size.
    """

    def __init__(self, model: Cdpta, k: int) -> None:
        self.model = model
        self.k = k
        self.grid = grid_points(model, k)
        n = len(self.grid)
        self.n = n
        self.locs = sorted(model.locations)
        self.loc_index = {l: i for i, l in enumerate(self.locs)}
        self.valid = np.array([[model.locations[l].holds(v) for v in self.grid] for l in self.locs])
        # per edge: enabled mask, and outcome (flat successor index, probability) arrays
        self.edges = []
        for e in sorted(model.edges, key=lambda e: e.id):
            mask = np.array([eval_constraint(e.guard, v) and model.locations[e.source].holds(v)
                             for v in self.grid])
            outs = []
            for o in e.outcomes:
                li = self.loc_index[o.target]
                succ = np.array([li * n + (0 if o.reset else j) for j in range(n)], dtype=np.int64)
                prob = np.array([float(o.expr(v)) if mask[j] else 0.0 for j, v in enumerate(self.grid)])
                outs.append((succ, prob))
            self.edges.append((self.loc_index[e.source], mask, outs))

    def _action_values(self, x: np.ndarray) -> List[np.ndarray]:
        out = []
        for _, _, outs in self.edges:
            q = np.zeros(self.n)
            for succ, prob in outs:
                q += prob * x[succ]
            out.append(q)
        return out

    def _best(self, qs: List[np.ndarray], maximize: bool) -> np.ndarray:
        fill = -np.inf if maximize else np.inf
        best = np.full((len(self.locs), self.n), fill)
        for (li, mask, _), q in zip(self.edges, qs):
            vals = np.where(mask, q, fill)
            suffix = (np.maximum if maximize else np.minimum).accumulate(vals[::-1])[::-1]
            best[li] = np.maximum(best[li], suffix) if maximize else np.minimum(best[li], suffix)
        return best

    def _avoid_set(self, tmask: np.ndarray) -> np.ndarray:
        """States with a scheduler avoiding the targets forever (greatest fixpoint)."""
        U = self.valid & ~tmask
        while True:
            flat = U.reshape(-1)
            has = np.zeros_like(U)
            for li, mask, outs in self.edges:
                good = mask.copy()
                for succ, prob in outs:
                    good &= (prob == 0) | flat[succ]
                has[li] |= np.logical_or.accumulate(good[::-1])[::-1]
            new = U & has
            if (new == U).all():
                return U
            U = new

    def reach(self, targets: Iterable[str], mode: str = "max", epsilon: float = 1e-12,
              max_iterations: int = 10**6) -> np.ndarray:
        """Value array of shape ``(locations, grid)``; invalid cells hold NaN."""
        maximize = mode.lower() == "max"
        tmask = np.zeros_like(self.valid)
        for l in targets:
            tmask[self.loc_index[l]] = self.valid[self.loc_index[l]]
        if maximize:
            zero = np.zeros_like(self.valid)
            x = np.where(tmask, 1.0, 0.0)
        else:
            zero = self._avoid_set(tmask)
            x = np.where(tmask | ~zero, 1.0, 0.0)
        x[~self.valid] = 0.0
        free = self.valid & ~tmask & ~zero
        for _ in range(max_iterations):
            best = self._best(self._action_values(x.reshape(-1)), maximize)
            y = np.where(free, best, x)
            delta = float(np.max(np.abs(y - x)))
            x = y
            if delta < epsilon:
                break
        out = x.copy()
        out[~self.valid] = np.nan
        return out

    def value(self, targets: Iterable[str], mode: str = "max", location: Optional[str] = None,
              v=0, epsilon: float = 1e-12) -> float:
        arr = self.reach(targets, mode, epsilon)
        loc = self.model.initial if location is None else location
        return float(arr[self.loc_index[loc], self.grid.index(Fraction(v))])


def grid_value(model: Cdpta, targets: Iterable[str], mode: str, k: int, epsilon: float = 1e-12) -> float:
    """Extremal grid-MDP reachability from ``(initial, 0)``."""
    return GridReach(model, k).value(targets, mode, epsilon=epsilon)


# ------------------------------------------------------------- schedulers

CDPTA = "cdpta"
IMDP = "imdp"


def step_key(B_hat: IntervalB, edge_id: str, location: str, B: IntervalB) -> Tuple:
    return ((B_hat, edge_id), (location, B))


@dataclass
class TableScheduler:
    """A finite scheduler keyed by B-paths.

    A key is a tuple starting with ``(location, B)`` followed by alternating
    ``(B_hat, edge id)`` and ``(location, B)`` entries.  A cdPTA move is
    ``(v_hat, edge id)``; an IMDP move is ``(EdgeAction, ((le, a), (re, b)))``.
    """

    kind: str
    table: Dict[Tuple, Dict[Tuple, Fraction]] = field(default_factory=dict)
    b_minimal: bool = False

    def entry(self, key: Tuple) -> Dict[Tuple, Fraction]:
        try:
            return self.table[key]
        except KeyError:
            raise ModelError("MISSING_TABLE_ENTRY", f"no table entry for history {format_key(key)}") from None

    def check_b_minimal(self, part: Partition) -> bool:
        if self.kind != CDPTA:
            raise ValueError("B-minimality is defined for cdPTA schedulers")
        for moves in self.table.values():
            seen = set()
            for (v_hat, edge_id) in moves:
                tag = (edge_id, part.locate(v_hat))
                if tag in seen:
                    return False
                seen.add(tag)
        return True


def _assignment(le, re) -> Tuple:
    return ((LE, Fraction(le)), (RE, Fraction(re)))


def bounded_reach_exact(system, sched: TableScheduler, horizon: int, targets: Iterable) -> Fraction:
    """Exact probability of visiting a target within ``horizon`` steps.

    For a cdPTA, ``targets`` are locations and a step is one timed move.  For
    an IMDP, ``targets`` are region states and a step is one region-to-region
    move (through an endpoint indicator).
    """
    if isinstance(system, Cdpta):
        if sched.kind != CDPTA:
            raise ValueError("scheduler kind does not match a cdPTA")
        return _bounded_cdpta(system, sched, horizon, frozenset(targets))
    if isinstance(system, Imdp):
        if sched.kind != IMDP:
            raise ValueError("scheduler kind does not match an IMDP")
        return _bounded_imdp(system, sched, horizon, frozenset(targets))
    raise TypeError("system must be a Cdpta or an Imdp")


def _bounded_cdpta(model: Cdpta, sched: TableScheduler, H: int, F: frozenset) -> Fraction:
    part = Partition(boundary_set(model))

    @lru_cache(maxsize=None)
    def rec(loc, v, key, h) -> Fraction:
        if loc in F:
            return Fraction(1)
        if h == 0:
            return Fraction(0)
        total = Fraction(0)
        for (v_hat, edge_id), w in sched.entry(key).items():
            edge = model.edge(edge_id)
            B_hat = part.locate(v_hat)
            for (loc2, v2), p in transition_distribution(model, (loc, v), (v_hat, edge)).items():
                total += w * p * rec(loc2, v2, key + step_key(B_hat, edge_id, loc2, part.locate(v2)), h - 1)
        return total

    v0 = Fraction(0)
    return rec(model.initial, v0, ((model.initial, part.locate(v0)),), H)


def _bounded_imdp(imdp: Imdp, sched: TableScheduler, H: int, F: frozenset) -> Fraction:
    @lru_cache(maxsize=None)
    def rec(region: RegionState, key, h) -> Fraction:
        if region in F:
            return Fraction(1)
        if h == 0:
            return Fraction(0)
        total = Fraction(0)
        for (action, alpha), w in sched.entry(key).items():
            if action not in imdp.actions.get(region, ()):
                raise ModelError("PRE_VIOLATION", f"action {action} is not available in {region}")
            row = imdp.rows[(region, action)]
            amap = {EndpointIndicator(action.B, action.edge, ep): q for ep, q in alpha}
            if not is_assignment(row, amap):
                raise ModelError("PRE_VIOLATION", f"{dict(alpha)} is not an assignment of {region}'s row")
            for ind, q in amap.items():
                if q == 0:
                    continue
                for nxt, iv in imdp.rows[(ind, TAU)].items():
                    nkey = key + step_key(action.B, action.edge, nxt.location, nxt.B)
                    total += w * q * iv.lep * rec(nxt, nkey, h - 1)
        return total

    init = imdp.initial
    return rec(init, ((init.location, init.B),), H)


def mimic_scheduler(sched: TableScheduler, imdp: Imdp) -> TableScheduler:
    """IMDP scheduler reproducing a B-minimal cdPTA scheduler.

    A delay to ``v_hat`` inside an open cell becomes the action on that cell
    with the endpoint weights that interpolate ``v_hat``.  A delay to a cell
    endpoint ``b`` itself becomes the action on ``[b,b]``; both indicators of a
    point cell carry the same distribution, so any interior split works and
    ``{1/2, 1/2}`` is used.
    """
    if sched.kind != CDPTA:
        raise ValueError("mimicry starts from a cdPTA scheduler")
    part = Partition(sorted({r.B.lo for r in imdp.regions} | {r.B.hi for r in imdp.regions}))
    if not sched.b_minimal or not sched.check_b_minimal(part):
        raise ModelError("NOT_B_MINIMAL", "scheduler picks two valuations of one edge inside one cell")
    out: Dict[Tuple, Dict[Tuple, Fraction]] = {}
    for key, moves in sched.table.items():
        entry: Dict[Tuple, Fraction] = {}
        for (v_hat, edge_id), w in moves.items():
            B_hat = part.locate(v_hat)
            if B_hat.is_point:
                alpha = _assignment(HALF, HALF)
            else:
                a = valuation_to_assignment(B_hat, v_hat)
                alpha = _assignment(a[LE], a[RE])
            entry[(EdgeAction(B_hat, edge_id), alpha)] = w
        out[key] = entry
    return TableScheduler(IMDP, out, b_minimal=True)


def _random_fraction_in(rng: random.Random, lo: Fraction, hi: Fraction, den: int) -> Fraction:
    """A random rational strictly between ``lo`` and ``hi``."""
    for d in range(den, den * 64 + 1):
        cands = [Fraction(n, d) for n in range(int(lo * d), int(hi * d) + 2) if lo < Fraction(n, d) < hi]
        if cands:
            return rng.choice(cands)
    return (lo + hi) / 2


def _random_weights(rng: random.Random, n: int) -> List[Fraction]:
    raw = [rng.randint(1, 4) for _ in range(n)]
    total = sum(raw)
    return [Fraction(r, total) for r in raw]


def random_b_minimal(model: Cdpta, horizon: int, rng: random.Random, max_branch: int = 2,
                     den: int = 8) -> TableScheduler:
    """A random B-minimal cdPTA scheduler covering all histories up to ``horizon``.

    Every reachable history gets an entry with one or ``max_branch`` moves on
    distinct (edge, cell) pairs.  Valuations inside open cells are random
    rationals with small denominators, never below the current valuation.
    """
    part = Partition(boundary_set(model))
    table: Dict[Tuple, Dict[Tuple, Fraction]] = {}
    start = (model.initial, Fraction(0), ((model.initial, part.locate(Fraction(0))),))
    frontier = [start]
    for _ in range(horizon):
        nxt = []
        for loc, v, key in frontier:
            if key in table:
                moves = table[key]
            else:
                options = []
                for e in sorted(model.edges_from(loc), key=lambda e: e.id):
                    for B_hat in part.cells:
                        if B_hat.hi < v or not edge_enabled_on(B_hat, e, model):
                            continue
                        if B_hat.is_point:
                            if B_hat.lo >= v:
                                options.append((B_hat.lo, e.id))
                        else:
                            lo = max(B_hat.lo, v)
                            if lo < B_hat.hi:
                                if v in B_hat and rng.random() < 0.25:
                                    options.append((v, e.id))
                                else:
                                    options.append((_random_fraction_in(rng, lo, B_hat.hi, den), e.id))
                if not options:
                    raise ModelError("ASSUMPTION_BROKEN", f"no timed move from ({loc},{v})")
                picked = rng.sample(options, min(len(options), rng.randint(1, max_branch)))
                moves = dict(zip(picked, _random_weights(rng, len(picked))))
                table[key] = moves
            for (v_hat, edge_id) in moves:
                edge = model.edge(edge_id)
                B_hat = part.locate(v_hat)
                for (loc2, v2) in transition_distribution(model, (loc, v), (v_hat, edge)):
                    nxt.append((loc2, v2, key + step_key(B_hat, edge_id, loc2, part.locate(v2))))
        frontier = nxt
    return TableScheduler(CDPTA, table, b_minimal=True)


# ------------------------------------------------------ scheduler text form

SCHEDULER_HEADER = "# cdpta-scheduler v1"


def format_key(key: Tuple) -> str:
    return " ".join(f"{a}@{b}" for a, b in key)


def parse_key(text: str) -> Tuple:
    out = []
    for i, tok in enumerate(text.split()):
        a, b = tok.split("@")
        out.append((a, IntervalB.parse(b)) if i % 2 == 0 else (IntervalB.parse(a), b))
    return tuple(out)


def format_move(kind: str, move: Tuple) -> str:
    if kind == CDPTA:
        return f"{move[0]} {move[1]}"
    action, alpha = move
    return f"{action.B} {action.edge} " + " ".join(f"{ep}={q}" for ep, q in alpha)


def parse_move(kind: str, text: str) -> Tuple:
    tok = text.split()
    if kind == CDPTA:
        return (Fraction(tok[0]), tok[1])
    alpha = dict(t.split("=") for t in tok[2:])
    return (EdgeAction(IntervalB.parse(tok[0]), tok[1]), _assignment(Fraction(alpha[LE]), Fraction(alpha[RE])))


def dump_scheduler(sched: TableScheduler) -> str:
    lines = [SCHEDULER_HEADER, f"kind {sched.kind}", f"b_minimal {str(sched.b_minimal).lower()}"]
    for key in sorted(sched.table, key=format_key):
        for move, p in sched.table[key].items():
            lines.append(f"entry {format_key(key)} | {format_move(sched.kind, move)} | {p}")
    return "\n".join(lines) + "\n"


def load_scheduler(text: str) -> TableScheduler:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != SCHEDULER_HEADER:
        raise ValueError("not a cdpta-scheduler v1 document")
    kind, b_minimal = CDPTA, False
    table: Dict[Tuple, Dict[Tuple, Fraction]] = {}
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        head, _, rest = ln.partition(" ")
        if head == "kind":
            kind = rest.strip()
        elif head == "b_minimal":
            b_minimal = rest.strip() == "true"
        elif head == "entry":
            key, move, prob = (p.strip() for p in rest.split("|"))
            table.setdefault(parse_key(key), {})[parse_move(kind, move)] = Fraction(prob)
        else:
            raise ValueError(f"unknown line: {ln!r}")
    return TableScheduler(kind, table, b_minimal)
