"""Acceptance criteria, one test per criterion.

Each test prints (and records for the terminal summary) a single line of the
form ``criterion N: PASS|FAIL - details``.
"""

import math
import random
import statistics
import time
from contextlib import contextmanager
from fractions import Fraction as Fr
from itertools import combinations, combinations_with_replacement

import numpy as np
import pytest

from cdpta import fixtures
from cdpta.generators import chain_family, random_imdp
from cdpta.imc import Base, reduce_to_imc
from cdpta.imdp import (
    LE,
    RE,
    TAU,
    EdgeAction,
    EndpointIndicator as Ind,
    IntervalB as B,
    RegionState as R,
    build_imdp,
    expected_sizes,
)
from cdpta.intervals import (
    IntervalDistribution,
    ProbInterval,
    is_interval_distribution,
    positive_mass_feasible,
    support_feasible,
)
from cdpta.model import check_initialised, enabled_interval, initialisation_graph, validate
from cdpta.oracle import bounded_reach_exact, grid_value, mimic_scheduler, random_b_minimal
from cdpta.solver import (
    Mode,
    QualMode,
    QuantQuery,
    SolveConfig,
    extremal_value,
    solve_imdp_qual,
    solve_imdp_quant,
    solve_qual,
    solve_quant,
    solve_query,
)
from conftest import ACCEPTANCE_LINES
from oracles import Grid, vertex_value


@contextmanager
def criterion(n, label):
    info = {}
    try:
        yield info
    except BaseException:
        line = f"criterion {n}: FAIL - {label} {info.get('detail', '')}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"criterion {n}: PASS - {label} {info.get('detail', '')}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)


def analytic_fixed_point(a, b):
    """Solve p = a + b*p exactly."""
    return Fr(a) / (1 - Fr(b))


def test_criterion_1_fig1_end_to_end():
    with criterion(1, "fig1 PMAX(S) = 4/5 and PMIN(T) = 1/5") as info:
        fig1 = fixtures.load("fig1")
        p = analytic_fixed_point(Fr(3, 4), Fr(1, 16))
        q = analytic_fixed_point(Fr(3, 16), Fr(1, 16))
        assert (p, q) == (Fr(4, 5), Fr(1, 5))
        t0 = time.perf_counter()
        vmax = solve_query(fig1, {"S"}, QuantQuery(Mode.MAX)).value
        t1 = time.perf_counter()
        vmin = solve_query(fig1, {"T"}, QuantQuery(Mode.MIN)).value
        t2 = time.perf_counter()
        info["detail"] = f"(pmax={vmax:.9f} in {t1 - t0:.3f}s, pmin={vmin:.9f} in {t2 - t1:.3f}s)"
        assert abs(vmax - float(p)) < 1e-6
        assert abs(vmin - float(q)) < 1e-6
        assert t1 - t0 < 1.0 and t2 - t1 < 1.0


def test_criterion_2_open_interval_gap():
    with criterion(2, "fig1 PMAX(T) = 1 while EXISTS1/FORALL0/EXISTS0 are false") as info:
        fig1 = fixtures.load("fig1")
        vmax = solve_query(fig1, {"T"}, QuantQuery(Mode.MAX)).value
        qual = {m: solve_query(fig1, {"T"}, m).holds for m in (QualMode.EXISTS1, QualMode.FORALL0, QualMode.EXISTS0)}
        info["detail"] = f"(pmax={vmax:.9f}, {', '.join(f'{m.value}={v}' for m, v in qual.items())})"
        assert abs(vmax - 1.0) < 1e-6
        assert not any(qual.values())


def _fragment(imdp):
    """States reachable from the initial region, not expanding S- and T-regions."""
    seen, stack = {imdp.initial}, [imdp.initial]
    while stack:
        s = stack.pop()
        if isinstance(s, R) and s.location in ("S", "T"):
            continue
        for a in imdp.actions[s]:
            for t in imdp.rows[(s, a)]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
    return seen


def test_criterion_3_construction_fidelity():
    with criterion(3, "build_imdp(fig1) reproduces the figure's IMDP fragment") as info:
        imdp = build_imdp(fixtures.load("fig1"))
        W0, S13, T13, F13, T45 = R("W", B(0, 0)), R("S", B(1, 3)), R("T", B(1, 3)), R("F", B(1, 3)), R("T", B(4, 5))
        wle, wre = Ind(B(1, 3), "pW", LE), Ind(B(1, 3), "pW", RE)
        fle, fre = Ind(B(4, 5), "pF", LE), Ind(B(4, 5), "pF", RE)
        frag = _fragment(imdp)
        assert frag == {W0, wle, wre, S13, T13, F13, fle, fre, T45}
        open01 = ProbInterval.open(0, 1)
        pt = ProbInterval.point
        assert imdp.actions[W0] == (EdgeAction(B(1, 3), "pW"),)
        assert imdp.actions[F13] == (EdgeAction(B(4, 5), "pF"),)
        assert imdp.row(W0, EdgeAction(B(1, 3), "pW")) == {wle: open01, wre: open01}
        assert imdp.row(F13, EdgeAction(B(4, 5), "pF")) == {fle: open01, fre: open01}
        expected = {
            wle: {T13: pt(Fr(1, 2)), F13: pt(Fr(1, 2))},
            wre: {S13: pt(Fr(3, 4)), T13: pt(Fr(1, 8)), F13: pt(Fr(1, 8))},
            fle: {T45: pt(1)},
            fre: {W0: pt(Fr(1, 2)), T45: pt(Fr(1, 2))},
        }
        for ind, row in expected.items():
            assert imdp.actions[ind] == (TAU,)
            assert imdp.row(ind, TAU) == row
        # the dashed zero-probability edges of the figure are absent keys
        assert imdp.row(wle, TAU).get_interval(S13) == pt(0)
        assert imdp.row(fle, TAU).get_interval(W0) == pt(0)
        info["detail"] = f"({len(frag)} fragment states, {sum(len(v) for v in expected.values())} singleton entries)"


def test_criterion_4_oracle_convergence():
    with criterion(4, "grid MAX values toward S rise with k and approach the solver value") as info:
        fig1 = fixtures.load("fig1")
        t0 = time.perf_counter()
        solver = solve_query(fig1, {"S"}, QuantQuery(Mode.MAX, epsilon=1e-12)).value
        values = [grid_value(fig1, {"S"}, "max", k) for k in range(4, 11)]
        elapsed = time.perf_counter() - t0
        gap = solver - values[-1]
        info["detail"] = f"(k=4..10: {values[0]:.5f} .. {values[-1]:.5f}, gap {gap:.5f}, {elapsed:.2f}s)"
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert all(v <= solver + 1e-9 for v in values)
        assert gap < 0.01
        assert elapsed < 30


def test_criterion_5_reduction_equivalence():
    with criterion(5, "200 random IMDPs: direct and reduced values and qualitative sets agree") as info:
        rng = random.Random(20240501)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(200):
            imdp, T = random_imdp(rng, max_states=6, max_actions=3)
            imc = reduce_to_imc(imdp)
            BT = {Base(t) for t in T}
            for mode in (Mode.MAX, Mode.MIN):
                cfg = SolveConfig(epsilon=1e-12, mode=mode)
                direct = solve_imdp_quant(imdp, T, cfg).values
                reduced = solve_quant(imc, BT, cfg).values
                for s in imdp.states:
                    worst = max(worst, abs(direct[s] - reduced[Base(s)]))
            for m in QualMode:
                direct = {Base(s) for s in solve_imdp_qual(imdp, T, m).holds}
                reduced = {s for s in solve_qual(imc, BT, m).holds if isinstance(s, Base)}
                assert direct == reduced, (m, direct, reduced)
        elapsed = time.perf_counter() - t0
        info["detail"] = f"(max |diff| = {worst:.2e}, {elapsed:.2f}s)"
        assert worst < 1e-9
        assert elapsed < 60


def test_criterion_6_scheduler_mimicry():
    with criterion(6, "50 random B-minimal schedulers: bounded reachability preserved exactly") as info:
        fig1 = fixtures.load("fig1")
        imdp = build_imdp(fig1)
        rng = random.Random(44)
        locations = sorted(fig1.locations)
        nontrivial = 0
        for _ in range(50):
            H = rng.randint(1, 4)
            sched = random_b_minimal(fig1, H, rng)
            F = set(rng.sample(locations, rng.randint(1, 2)))
            lhs = bounded_reach_exact(fig1, sched, H, F)
            rhs = bounded_reach_exact(imdp, mimic_scheduler(sched, imdp), H, imdp.targets_for(F))
            assert isinstance(lhs, Fr) and isinstance(rhs, Fr)
            assert lhs == rhs, (F, H, lhs, rhs)
            nontrivial += 0 < lhs < 1
        info["detail"] = f"({nontrivial} of 50 with probability strictly between 0 and 1)"
        assert nontrivial >= 10


CATALOGUE_POINTS = sorted({Fr(n, d) for d in range(1, 5) for n in range(d + 1)})


def _catalogue():
    out = [ProbInterval.point(p) for p in CATALOGUE_POINTS]
    for lo, hi in combinations(CATALOGUE_POINTS, 2):
        for lc in (True, False):
            for rc in (True, False):
                out.append(ProbInterval(lo, hi, lc, rc))
    return out


def test_criterion_7_feasibility_grid_oracle():
    with criterion(7, "feasibility checks agree with the exhaustive rational grid") as info:
        t0 = time.perf_counter()
        cat = _catalogue()
        grid = Grid(den=48)
        member = {iv: grid.member_table(iv) for iv in cat}
        pts = grid.pts
        keys = ("a", "b", "c")
        # bit i of a point's pattern is set when coordinate i is positive
        pattern = (pts > 0).astype(np.int64) @ np.array([1, 2, 4])
        subsets = [frozenset(c) for r in range(4) for c in combinations(range(3), r)]
        bits = {U: sum(1 << i for i in U) for U in subsets}
        cases = 0
        for combo in combinations_with_replacement(range(len(cat)), 3):
            ivs = [cat[i] for i in combo]
            dist = IntervalDistribution(dict(zip(keys, ivs)))
            ok = member[ivs[0]][pts[:, 0]] & member[ivs[1]][pts[:, 1]] & member[ivs[2]][pts[:, 2]]
            present = np.unique(pattern[ok]).tolist()
            assert is_interval_distribution(dist) == bool(present), dist
            cases += 1
            for U in subsets:
                inside = [p for p in present if p & ~bits[U] == 0]
                Ukeys = {keys[i] for i in U}
                assert support_feasible(dist, Ukeys) == bool(inside), (dist, U)
                cases += 1
                for i in U:
                    hit = any(p >> i & 1 for p in inside)
                    assert positive_mass_feasible(dist, Ukeys, {keys[i]}) == hit, (dist, U, i)
                    cases += 1
        elapsed = time.perf_counter() - t0
        info["detail"] = f"({len(cat)} intervals, {cases} checks, {elapsed:.1f}s)"
        assert elapsed < 60


def test_criterion_8_initialisation_fixtures():
    with criterion(8, "fig1 initialised; the non-initialised model yields a checkable witness") as info:
        fig1 = fixtures.load("fig1")
        bad = fixtures.load("notinit")
        assert check_initialised(fig1) is None and validate(fig1).ok
        report = validate(bad)
        assert "NOT_INITIALISED" in report.codes()
        witness = report.witness
        graph = initialisation_graph(bad)
        assert not bad.edge(witness[0]).is_constant and not bad.edge(witness[-1]).is_constant
        for p, q in zip(witness, witness[1:]):
            assert q in graph[p]
            ep, eq = bad.edge(p), bad.edge(q)
            ip, iq = enabled_interval(ep, bad), enabled_interval(eq, bad)
            overlap = ip.intersect(iq)
            assert not overlap.is_empty and not overlap.is_point
            link = [o for o in ep.outcomes if not o.reset and o.target == eq.source]
            assert link
        info["detail"] = f"(witness {' -> '.join(witness)})"


def _random_closed_row(rng, n):
    cuts = sorted(rng.randint(0, 12) for _ in range(n - 1))
    point = [Fr(b - a, 12) for a, b in zip([0] + cuts, cuts + [12])]
    row = {}
    for i, p in enumerate(point):
        lo = p - Fr(rng.randint(0, int(p * 12)), 12)
        hi = p + Fr(rng.randint(0, int((1 - p) * 12)), 12)
        row[f"t{i}"] = ProbInterval.closed(lo, hi)
    return IntervalDistribution(row)


def test_criterion_9_inner_step_vertex_enumeration():
    with criterion(9, "extremal_value equals vertex enumeration on 500 closed rows") as info:
        rng = random.Random(9)
        for _ in range(500):
            row = _random_closed_row(rng, rng.randint(1, 4))
            values = {k: Fr(rng.randint(0, 1000), 1000) for k in row}
            for mode, maximize in ((Mode.MAX, True), (Mode.MIN, False)):
                got, alpha = extremal_value(row, values, mode)
                assert got == vertex_value(row, values, maximize)
                assert sum(alpha.values()) == 1
                assert all(row[k].lep <= alpha[k] <= row[k].rep for k in row)
        info["detail"] = "(exact rational comparison, MAX and MIN)"


def test_criterion_10_polynomial_growth():
    with criterion(10, "state counts match the closed form; wall time grows at most cubically") as info:
        sizes = (5, 10, 20, 40)
        times = []
        for n in sizes:
            m = chain_family(n)
            imdp = build_imdp(m)
            assert (len(imdp.regions), len(imdp.indicators)) == expected_sizes(m)
            runs = []
            for _ in range(3):
                t0 = time.perf_counter()
                solve_query(m, {"Goal"}, QuantQuery(Mode.MIN))
                runs.append(time.perf_counter() - t0)
            times.append(statistics.median(runs))
        xs = [math.log(n) for n in sizes]
        ys = [math.log(t) for t in times]
        slope = np.polyfit(xs, ys, 1)[0]
        info["detail"] = f"(times {', '.join(f'{t * 1000:.0f}ms' for t in times)}; log-log slope {slope:.2f})"
        assert slope <= 3.0
