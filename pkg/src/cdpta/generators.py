"""Model generators for property tests and benchmarks."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import List, Tuple

from .imdp import Imdp
from .intervals import IntervalDistribution, ProbInterval
from .model import Cdpta, InvariantSpec, make_edge


def chain_family(n: int, width: int = 4) -> Cdpta:
    """A valid, initialised model with ``n`` locations and ``2n - 2`` edges.

    Locations ``L0 .. L{n-3}`` form a chain ending in ``Goal``; ``Z`` is a
    sink.  Edge ``e{i}`` is enabled on ``(j, j+1)`` with ``j = i mod width``
    and either advances (reset), restarts at ``L0`` (reset) or falls into the
    sink; ``g{i}`` is a constant edge keeping the location live up to the
    invariant bound.
    """
    if n < 3:
        raise ValueError("the family needs at least three locations")
    chain = [f"L{i}" for i in range(n - 2)]
    locs = {name: InvariantSpec(False, width) for name in chain + ["Goal", "Z"]}
    edges = []
    for i, name in enumerate(chain):
        j = i % width
        nxt = chain[i + 1] if i + 1 < len(chain) else "Goal"
        half = Fraction(1, 2)
        edges.append(make_edge(f"e{i}", name, [(">", j), ("<", j + 1)], [
            (nxt, True, -half * j, half),
            ("L0", True, half, 0),
            ("Z", False, half * (1 + j), -half),
        ]))
        edges.append(make_edge(f"g{i}", name, [(">=", j + 1)], [(name, False, half, 0), ("Z", False, half, 0)]))
    edges.append(make_edge("loopGoal", "Goal", [], [("Goal", False, 1, 0)]))
    edges.append(make_edge("loopZ", "Z", [], [("Z", False, 1, 0)]))
    return Cdpta(locs, edges, chain[0])


def random_interval_row(rng: random.Random, keys, den: int = 6, open_bias: float = 0.5) -> IntervalDistribution:
    """A random interval distribution over ``keys`` containing a random point."""
    n = len(keys)
    cuts = sorted(rng.randint(0, den) for _ in range(n - 1))
    point = [Fraction(b - a, den) for a, b in zip([0] + cuts, cuts + [den])]
    entries = {}
    for k, p in zip(keys, point):
        if rng.random() < 0.2:
            entries[k] = ProbInterval.point(p)
            continue
        lo = Fraction(rng.randint(0, int(p * den)), den)
        hi = Fraction(rng.randint(int(p * den), den), den)
        if lo == hi:
            entries[k] = ProbInterval.point(lo)
            continue
        lc = lo == p or rng.random() >= open_bias
        rc = hi == p or rng.random() >= open_bias
        entries[k] = ProbInterval(lo, hi, lc, rc)
    return IntervalDistribution(entries)


def random_imdp(rng: random.Random, max_states: int = 6, max_actions: int = 3) -> Tuple[Imdp, set]:
    """A random IMDP over integer states with a random non-empty target set."""
    n = rng.randint(1, max_states)
    states = tuple(range(n))
    actions, rows = {}, {}
    for s in states:
        acts = tuple(f"a{i}" for i in range(rng.randint(1, max_actions)))
        actions[s] = acts
        for a in acts:
            succ = rng.sample(states, rng.randint(1, min(3, n)))
            rows[(s, a)] = random_interval_row(rng, succ)
    targets = set(rng.sample(states, rng.randint(0, max(1, n // 2))))
    return Imdp(states, actions, rows, 0), targets


def random_rationals(rng: random.Random, lo: Fraction, hi: Fraction, count: int, den: int = 97) -> List[Fraction]:
    """Rationals strictly inside ``(lo, hi)``."""
    out = []
    for _ in range(count):
        t = Fraction(rng.randint(1, den - 1), den)
        out.append(lo + (hi - lo) * t)
    return out
