"""Probability intervals with independent open/closed endpoints.

An :class:`IntervalDistribution` maps target keys to :class:`ProbInterval`
values; keys that are absent stand for the point interval ``[0,0]``.
Assignments are plain ``dict`` objects from keys to ``Fraction``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Collection, Dict, Hashable, Iterator, Mapping

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class ProbInterval:
    lep: Fraction
    rep: Fraction
    left_closed: bool = True
    right_closed: bool = True

    def __post_init__(self) -> None:
        lep, rep = Fraction(self.lep), Fraction(self.rep)
        object.__setattr__(self, "lep", lep)
        object.__setattr__(self, "rep", rep)
        if not (0 <= lep <= rep <= 1):
            raise ValueError(f"bad interval endpoints {lep}, {rep}")
        if lep == rep and not (self.left_closed and self.right_closed):
            raise ValueError("a degenerate interval must be closed")

    @classmethod
    def point(cls, q) -> "ProbInterval":
        return cls(Fraction(q), Fraction(q))

    @classmethod
    def open(cls, a, b) -> "ProbInterval":
        return cls(Fraction(a), Fraction(b), False, False)

    @classmethod
    def closed(cls, a, b) -> "ProbInterval":
        return cls(Fraction(a), Fraction(b))

    def __contains__(self, q) -> bool:
        if q < self.lep or q > self.rep:
            return False
        if q == self.lep and not self.left_closed:
            return False
        return not (q == self.rep and not self.right_closed)

    @property
    def contains_zero(self) -> bool:
        return self.lep == 0 and self.left_closed

    def closed_version(self) -> "ProbInterval":
        return ProbInterval(self.lep, self.rep)

    def __str__(self) -> str:
        return (
            f"{'[' if self.left_closed else '('}{self.lep},{self.rep}"
            f"{']' if self.right_closed else ')'}"
        )


_INTERVAL_RE = re.compile(r"^\s*([\[(])\s*(-?\d+(?:/\d+)?)\s*,\s*(-?\d+(?:/\d+)?)\s*([\])])\s*$")


def parse_interval(text: str) -> ProbInterval:
    """Inverse of ``str(ProbInterval)``: accepts ``(a,b)``, ``[a,b]``, ``(a,b]``, ``[a,b)``."""
    m = _INTERVAL_RE.match(text)
    if not m:
        raise ValueError(f"not an interval: {text!r}")
    return ProbInterval(Fraction(m.group(2)), Fraction(m.group(3)), m.group(1) == "[", m.group(4) == "]")


class IntervalDistribution(Mapping):
    """Immutable map from target keys to intervals; missing keys read as [0,0]."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[Hashable, ProbInterval] = ()) -> None:
        self._entries: Dict[Hashable, ProbInterval] = dict(entries)

    def __getitem__(self, key: Hashable) -> ProbInterval:
        return self._entries[key]

    def get_interval(self, key: Hashable) -> ProbInterval:
        return self._entries.get(key, ProbInterval(ZERO, ZERO))

    def __iter__(self) -> Iterator:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, IntervalDistribution):
            return self._entries == other._entries
        if isinstance(other, Mapping):
            return self._entries == dict(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{k!r}: {v}" for k, v in self._entries.items())
        return f"IntervalDistribution({{{body}}})"

    @property
    def lep_sum(self) -> Fraction:
        return sum((i.lep for i in self._entries.values()), ZERO)

    @property
    def rep_sum(self) -> Fraction:
        return sum((i.rep for i in self._entries.values()), ZERO)

    def rekey(self, fn) -> "IntervalDistribution":
        return IntervalDistribution({fn(k): v for k, v in self._entries.items()})


def _conditions(entries) -> bool:
    lo = hi = ZERO
    all_lc = all_rc = True
    for i in entries:
        if i.lep:
            lo += i.lep
        if i.rep:
            hi += i.rep
        all_lc = all_lc and i.left_closed
        all_rc = all_rc and i.right_closed
    if not (lo <= 1 <= hi):
        return False
    if lo == 1 and not all_lc:
        return False
    return not (hi == 1 and not all_rc)


def is_interval_distribution(dist: Mapping[Hashable, ProbInterval]) -> bool:
    return _conditions(dist.values())


def is_assignment(dist: Mapping[Hashable, ProbInterval], alpha: Mapping[Hashable, Fraction]) -> bool:
    if sum(alpha.values(), ZERO) != 1:
        return False
    for key, q in alpha.items():
        if q < 0:
            return False
        if key not in dist:
            if q != 0:
                return False
        elif q not in dist[key]:
            return False
    return all(key in alpha or dist[key].contains_zero for key in dist)


def witness_assignment(dist: Mapping[Hashable, ProbInterval]) -> Dict[Hashable, Fraction]:
    """A deterministic assignment for ``dist``.

    Every entry starts at its lower endpoint; open-left entries are nudged
    inside by a common ``delta``; the remaining mass is then spread over all
    entries in proportion to their remaining room.  When the upper endpoints
    sum to more than one, every entry ends strictly below its upper endpoint,
    so right-open entries are respected.
    """
    if not is_interval_distribution(dist):
        raise ValueError("not an interval distribution")
    keys = list(dist)
    alpha = {k: dist[k].lep for k in keys}
    open_left = [k for k in keys if not dist[k].left_closed]
    if open_left:
        n = len(open_left)
        delta = min((dist[k].rep - dist[k].lep) / (4 * n) for k in open_left)
        # (2a) guarantees the lower endpoints leave room for the nudge
        delta = min(delta, (ONE - sum(alpha.values(), ZERO)) / (2 * n))
        for k in open_left:
            alpha[k] += delta
    budget = ONE - sum(alpha.values(), ZERO)
    room = {k: dist[k].rep - alpha[k] for k in keys}
    total_room = sum(room.values(), ZERO)
    if budget > 0:
        share = budget / total_room
        for k in keys:
            alpha[k] += room[k] * share
    return alpha


def close_intervals(dist: Mapping[Hashable, ProbInterval]) -> IntervalDistribution:
    return IntervalDistribution({k: iv.closed_version() for k, iv in dist.items()})


def support_feasible(dist: Mapping[Hashable, ProbInterval], support: Collection[Hashable]) -> bool:
    """Does some assignment put all of its mass inside ``support``?"""
    inside = []
    for key, iv in dist.items():
        if key in support:
            inside.append(iv)
        elif not iv.contains_zero:
            return False
    return _conditions(inside)


def positive_mass_feasible(
    dist: Mapping[Hashable, ProbInterval], support: Collection[Hashable], hit: Collection[Hashable]
) -> bool:
    """Does some assignment supported in ``support`` give positive mass to ``hit``?"""
    if not support_feasible(dist, support):
        return False
    lo = sum((iv.lep for k, iv in dist.items() if k in support), ZERO)
    for key, iv in dist.items():
        if key in support and key in hit and iv.rep > 0 and (lo < 1 or iv.lep > 0):
            return True
    return False


def assignably_positive(dist: Mapping[Hashable, ProbInterval]) -> list:
    """Keys that receive positive mass under at least one assignment."""
    lo = dist.lep_sum if isinstance(dist, IntervalDistribution) else sum((i.lep for i in dist.values()), ZERO)
    return [k for k, iv in dist.items() if iv.rep > 0 and (lo < 1 or iv.lep > 0)]
