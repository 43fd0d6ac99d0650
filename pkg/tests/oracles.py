"""Test-only brute-force oracles, independent of the package's algorithms."""

from fractions import Fraction
from itertools import product

import numpy as np


def vertices(row):
    """All vertices of {alpha : lep <= alpha <= rep, sum alpha = 1} for a closed row.

    A vertex fixes all but one coordinate at a bound; the free one is then
    determined by the sum constraint.
    """
    keys = list(row)
    out = set()
    for free in range(len(keys)):
        others = [k for i, k in enumerate(keys) if i != free]
        for choice in product(*[(row[k].lep, row[k].rep) for k in others]):
            rest = 1 - sum(choice, Fraction(0))
            iv = row[keys[free]]
            if iv.lep <= rest <= iv.rep:
                alpha = dict(zip(others, choice))
                alpha[keys[free]] = rest
                out.add(tuple(alpha[k] for k in keys))
    return [dict(zip(keys, v)) for v in out]


def vertex_value(row, values, maximize):
    vals = [sum(a[k] * values[k] for k in row) for a in vertices(row)]
    return max(vals) if maximize else min(vals)


class Grid:
    """Exhaustive rational grid over assignments of up to three keys."""

    def __init__(self, den: int, keys: int = 3):
        self.den = den
        pts = [(a, b, den - a - b) for a in range(den + 1) for b in range(den + 1 - a)]
        if keys == 1:
            pts = [(den, 0, 0)]
        elif keys == 2:
            pts = [(a, den - a, 0) for a in range(den + 1)]
        self.pts = np.array(pts, dtype=np.int64)
        self.keys = keys

    def member_table(self, iv):
        """Boolean vector over grid numerators 0..den: is n/den inside iv?"""
        return np.array([Fraction(n, self.den) in iv for n in range(self.den + 1)])
