from fractions import Fraction as Fr

from cdpta.imc import (
    FULL,
    Base,
    Imc,
    Pair,
    dump_imc,
    dump_imdp,
    imc_to_dot,
    lift_targets,
    load_imc,
    load_imdp,
    reduce_to_imc,
)
from cdpta.imdp import Imdp
from cdpta.intervals import IntervalDistribution, ProbInterval


def fig2_fragment():
    row1 = IntervalDistribution({"s1": ProbInterval(Fr(1, 4), Fr(2, 3), False, True),
                                 "s2": ProbInterval(Fr(1, 3), Fr(3, 4), True, False)})
    row2 = IntervalDistribution({"s2": ProbInterval.point(1)})
    loop = IntervalDistribution({"s1": ProbInterval.point(1)})
    loop2 = IntervalDistribution({"s2": ProbInterval.point(1)})
    return Imdp(("s", "s1", "s2"), {"s": ("a1", "a2"), "s1": ("a",), "s2": ("a",)},
                {("s", "a1"): row1, ("s", "a2"): row2, ("s1", "a"): loop, ("s2", "a"): loop2}, "s")


def test_pairs_get_full_intervals():
    imc = reduce_to_imc(fig2_fragment())
    assert imc.rows[Base("s")] == {Pair("s", "a1"): FULL, Pair("s", "a2"): FULL}


def test_pair_rows_rekeyed():
    imc = reduce_to_imc(fig2_fragment())
    assert imc.rows[Pair("s", "a1")] == {
        Base("s1"): ProbInterval(Fr(1, 4), Fr(2, 3), False, True),
        Base("s2"): ProbInterval(Fr(1, 3), Fr(3, 4), True, False),
    }


def test_single_self_loop():
    imdp = Imdp(("s",), {"s": ("a",)}, {("s", "a"): IntervalDistribution({"s": ProbInterval.point(1)})}, "s")
    imc = reduce_to_imc(imdp)
    assert len(imc.states) == 2
    assert imc.rows[Base("s")] == {Pair("s", "a"): FULL}
    assert imc.rows[Pair("s", "a")] == {Base("s"): ProbInterval.point(1)}


def test_alternation_and_size(fig1_imdp, fig1_imc):
    for s, row in fig1_imc.rows.items():
        kinds = {type(t) for t in row}
        assert kinds == ({Pair} if isinstance(s, Base) else {Base})
    assert len(fig1_imc.states) == len(fig1_imdp.states) + sum(len(a) for a in fig1_imdp.actions.values())


def test_target_lifting(fig1_imc, fig1_imdp):
    assert fig1_imc.targets_for({"S"}) == lift_targets(fig1_imdp.targets_for({"S"}))


def test_text_round_trip(fig1_imdp, fig1_imc):
    assert load_imc(dump_imc(fig1_imc)) == fig1_imc
    assert load_imdp(dump_imdp(fig1_imdp)) == fig1_imdp


def test_dump_is_deterministic(fig1, fig1_imc):
    from cdpta.imdp import build_imdp

    assert dump_imc(fig1_imc) == dump_imc(reduce_to_imc(build_imdp(fig1)))


def test_dot(fig1_imc):
    dot = imc_to_dot(fig1_imc)
    assert dot.count("shape=box") == sum(1 for s in fig1_imc.states if isinstance(s, Pair))
