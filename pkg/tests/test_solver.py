import random
import time
from fractions import Fraction as Fr

import pytest

from cdpta.generators import random_imdp
from cdpta.imc import Base, Pair, reduce_to_imc
from cdpta.imdp import EndpointIndicator as Ind, IntervalB as B, RegionState as R, LE, RE
from cdpta.intervals import IntervalDistribution, ProbInterval, close_intervals
from cdpta.model import ModelError
from cdpta.oracle import FiniteMdp, mdp_reach
from cdpta.solver import (
    ChoiceSystem,
    Mode,
    QualMode,
    QuantQuery,
    SolveConfig,
    Threshold,
    decide,
    extremal_value,
    policy_value,
    solve_imdp_qual,
    solve_imdp_quant,
    solve_qual,
    solve_quant,
    solve_query,
)
from oracles import vertices

C = ProbInterval.closed
P = ProbInterval.point
START = Base(R("W", B(0, 0)))


class TestExtremalValue:
    def test_full_mass_on_best(self):
        val, alpha = extremal_value({"a": C(0, 1), "b": C(0, 1)}, {"a": 1.0, "b": 0.0}, Mode.MAX)
        assert val == 1 and alpha == {"a": 1, "b": 0}

    def test_point_row(self):
        val, alpha = extremal_value({"a": P(Fr(1, 2)), "b": P(Fr(1, 2))}, {"a": 1.0, "b": 0.0}, Mode.MAX)
        assert val == 0.5 and alpha == {"a": Fr(1, 2), "b": Fr(1, 2)}

    def test_closed_region_row(self):
        val, alpha = extremal_value({"le": C(0, 1), "re": C(0, 1)}, {"le": 0.75, "re": 0.25}, "max")
        assert val == 0.75 and alpha["le"] == 1

    def test_min(self):
        val, alpha = extremal_value({"a": C(Fr(1, 4), 1), "b": C(0, 1)}, {"a": Fr(1), "b": Fr(0)}, Mode.MIN)
        assert val == Fr(1, 4) and alpha == {"a": Fr(1, 4), "b": Fr(3, 4)}

    def test_ties_keep_row_order(self):
        _, alpha = extremal_value({"b": C(0, 1), "a": C(0, 1)}, {"a": 1.0, "b": 1.0}, Mode.MAX)
        assert alpha == {"b": 1, "a": 0}


class TestQuant:
    def test_fig3_max(self, fig1_imc):
        res = solve_quant(fig1_imc, {Base(R("S", B(1, 3)))}, SolveConfig(1e-12))
        assert res.values[START] == pytest.approx(0.8, abs=1e-6)
        assert res.converged

    def test_fig3_min(self, fig1_imc):
        targets = {Base(R("T", B(1, 3))), Base(R("T", B(4, 5)))}
        res = solve_quant(fig1_imc, targets, SolveConfig(1e-12, mode=Mode.MIN))
        assert res.values[START] == pytest.approx(0.2, abs=1e-6)

    def test_all_targets(self, fig1_imc):
        res = solve_quant(fig1_imc, set(fig1_imc.states))
        assert set(res.values.values()) == {1.0} and res.iterations == 1

    def test_unknown_target(self, fig1_imc):
        with pytest.raises(ModelError) as e:
            solve_quant(fig1_imc, {"nope"})
        assert e.value.code == "TARGET_UNKNOWN_STATE"
        with pytest.raises(ModelError):
            solve_qual(fig1_imc, {"nope"}, QualMode.EXISTS1)

    def test_exact_sets_pinned(self, fig1_imc):
        res = solve_quant(fig1_imc, fig1_imc.targets_for({"T"}))
        assert all(res.values[s] == 1.0 for s in res.exact_one)
        assert all(res.values[s] == 0.0 for s in res.exact_zero)
        assert Base(R("S", B(1, 3))) in res.exact_zero

    @pytest.mark.parametrize("mode", [Mode.MAX, Mode.MIN])
    def test_monotone_iterates(self, fig1_imc, mode):
        res = solve_quant(fig1_imc, fig1_imc.targets_for({"S"}), SolveConfig(1e-10, mode=mode), record=True)
        for before, after in zip(res.trace, res.trace[1:]):
            for x, y in zip(before, after):
                assert 0.0 <= y <= 1.0
                assert (y >= x - 1e-15) if mode == Mode.MAX else (y <= x + 1e-15)

    def test_iteration_cap(self, fig1_imc):
        res = solve_quant(fig1_imc, fig1_imc.targets_for({"S"}), SolveConfig(1e-12, max_iterations=3))
        assert not res.converged and res.iterations == 3

    def test_config_checks(self):
        with pytest.raises(ValueError):
            SolveConfig(epsilon=0)
        assert SolveConfig(mode="min").mode == Mode.MIN


class TestQual:
    def test_open_gap(self, fig1_imc):
        T = fig1_imc.targets_for({"T"})
        assert START not in solve_qual(fig1_imc, T, QualMode.EXISTS1).holds
        quant = solve_quant(fig1_imc, T)
        assert quant.values[START] == pytest.approx(1.0, abs=1e-6)

    def test_forall0_false_on_loop(self, fig1_imc):
        holds = solve_qual(fig1_imc, fig1_imc.targets_for({"T"}), QualMode.FORALL0).holds
        for loc, cell in (("W", B(0, 0)), ("F", B(1, 3)), ("F", B(4, 5))):
            assert Base(R(loc, cell)) not in holds

    def test_absorbing_target(self):
        imdp_row = IntervalDistribution({"t": P(1)})
        from cdpta.imdp import Imdp

        imc = reduce_to_imc(Imdp(("t",), {"t": ("a",)}, {("t", "a"): imdp_row}, "t"))
        T = {Base("t")}
        got = {m: Base("t") in solve_qual(imc, T, m).holds for m in QualMode}
        assert got == {QualMode.EXISTS1: True, QualMode.FORALL1: True,
                       QualMode.FORALL0: False, QualMode.EXISTS0: False}

    def test_lep_sum_blocks_positive_edge(self):
        # b has rep > 0 but a's lower endpoint already takes all the mass
        from cdpta.imdp import Imdp

        rows = {("s", "a"): IntervalDistribution({"u": P(1), "t": C(0, Fr(1, 2))}),
                ("u", "a"): IntervalDistribution({"u": P(1)}),
                ("t", "a"): IntervalDistribution({"t": P(1)})}
        imc = reduce_to_imc(Imdp(("s", "u", "t"), {k: ("a",) for k in "sut"}, rows, "s"))
        assert Base("s") in solve_qual(imc, {Base("t")}, QualMode.FORALL0).holds

    def test_open_intervals_force_exists1(self):
        from cdpta.imdp import Imdp

        # from s every assignment sends positive mass to both successors
        rows = {("s", "a"): IntervalDistribution({"t": ProbInterval.open(0, 1), "s": ProbInterval.open(0, 1)}),
                ("t", "a"): IntervalDistribution({"t": P(1)})}
        imdp = Imdp(("s", "t"), {"s": ("a",), "t": ("a",)}, rows, "s")
        assert "s" in solve_imdp_qual(imdp, {"t"}, QualMode.FORALL1).holds
        assert "s" not in solve_imdp_qual(imdp, {"t"}, QualMode.EXISTS0).holds
        closed_rows = {k: close_intervals(v) for k, v in rows.items()}
        closed = Imdp(("s", "t"), {"s": ("a",), "t": ("a",)}, closed_rows, "s")
        assert "s" in solve_imdp_qual(closed, {"t"}, QualMode.EXISTS0).holds


class TestQuery:
    def test_pmax_success(self, fig1):
        ans = solve_query(fig1, {"S"}, QuantQuery(Mode.MAX, Threshold.parse(">= 4/5")))
        assert ans.verdict is True and not ans.undecided
        assert ans.value == pytest.approx(0.8, abs=1e-6)
        assert ans.exact_value == Fr(4, 5)

    def test_gap(self, fig1):
        ans = solve_query(fig1, {"T"}, QuantQuery(Mode.MAX, Threshold.parse(">= 1")))
        assert ans.verdict is True
        assert solve_query(fig1, {"T"}, QualMode.EXISTS1).holds is False

    def test_all_locations(self, fig1):
        F = set(fig1.locations)
        assert solve_query(fig1, F, QuantQuery(Mode.MIN)).value == 1.0
        assert solve_query(fig1, F, "forall1").holds

    def test_statistics(self, fig1):
        stats = solve_query(fig1, {"S"}, QuantQuery(Mode.MAX)).stats
        assert stats["imdp_states"] == 70 and stats["imc_states"] == 212

    def test_invalid_model(self, notinit):
        with pytest.raises(ModelError):
            solve_query(notinit, {"D"}, QuantQuery(Mode.MAX))

    def test_unknown_location(self, fig1):
        with pytest.raises(ModelError):
            solve_query(fig1, {"Q"}, QuantQuery(Mode.MAX))

    def test_policy_value_is_exact(self, fig1):
        from cdpta.imdp import build_imdp
        from cdpta.solver.engine import quant_system

        imc = reduce_to_imc(build_imdp(fig1))
        sys = ChoiceSystem.from_imc(imc)
        T = imc.targets_for({"T"})
        res = quant_system(sys, T, SolveConfig(mode=Mode.MIN))
        assert policy_value(sys, T, res, Mode.MIN, START) == Fr(1, 5)


class TestDecide:
    def test_far_from_threshold(self):
        assert decide(0.5, Threshold.parse("< 3/4"), 1e-9) == (True, False)

    def test_near_threshold_without_certificate(self):
        assert decide(0.8 - 1e-10, Threshold.parse(">= 4/5"), 1e-9) == (False, True)

    def test_certificate(self):
        assert decide(0.8 - 1e-10, Threshold.parse(">= 4/5"), 1e-9, Fr(4, 5)) == (True, False)
        assert decide(0.2 + 1e-10, Threshold.parse("<= 1/5"), 1e-9, Fr(1, 5), Mode.MIN) == (True, False)

    def test_threshold_parsing(self):
        assert Threshold.parse("≥ 4/5") == Threshold(">=", Fr(4, 5))
        assert Threshold.parse("<0.25") == Threshold("<", Fr(1, 4))
        for bad in ("= 1/2", ">= 3/2", "4/5"):
            with pytest.raises(ValueError):
                Threshold.parse(bad)


def vertex_mdp(imdp):
    """The closed IMDP as a finite MDP whose actions are (action, vertex) pairs."""
    actions, rows = {}, {}
    for s in imdp.states:
        acts = []
        for a in imdp.actions[s]:
            for i, alpha in enumerate(vertices(close_intervals(imdp.rows[(s, a)]))):
                acts.append((a, i))
                rows[(s, (a, i))] = {t: p for t, p in alpha.items() if p}
        actions[s] = acts
    return FiniteMdp(list(imdp.states), actions, rows)


def test_quant_matches_vertex_mdp():
    rng = random.Random(21)
    for _ in range(60):
        imdp, T = random_imdp(rng)
        mdp = vertex_mdp(imdp)
        for mode in (Mode.MAX, Mode.MIN):
            ours = solve_imdp_quant(imdp, T, SolveConfig(1e-12, mode=mode)).values
            ref = mdp_reach(mdp, T, mode.value, 1e-12)
            for s in imdp.states:
                assert ours[s] == pytest.approx(ref[s], abs=1e-8)


def test_quant_qual_consistency():
    rng = random.Random(22)
    for _ in range(80):
        imdp, T = random_imdp(rng)
        imc = reduce_to_imc(imdp)
        BT = {Base(t) for t in T}
        qmax = solve_quant(imc, BT, SolveConfig(1e-12))
        qmin = solve_quant(imc, BT, SolveConfig(1e-12, mode=Mode.MIN))
        qual = {m: solve_qual(imc, BT, m).holds for m in QualMode}
        for s in imc.states:
            assert (s in qual[QualMode.FORALL0]) == (s in qmax.exact_zero)
            assert (s in qual[QualMode.FORALL1]) == (s in qmin.exact_one)
            if s in qual[QualMode.EXISTS1]:
                assert qmax.values[s] == pytest.approx(1.0, abs=1e-9)
            if s in qual[QualMode.EXISTS0]:
                assert qmin.values[s] == pytest.approx(0.0, abs=1e-9)
            if BT and s in qual[QualMode.FORALL0]:
                assert s not in qual[QualMode.EXISTS1]
