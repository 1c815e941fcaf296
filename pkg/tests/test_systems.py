import pytest

import cpds.stacks as ST
from cpds import (
    ArityMismatch,
    Configuration,
    Cpds,
    ExtRule,
    FiniteLanguage,
    Mcpds,
    NotNormalized,
    Rule,
    Run,
    add_clearing_rules,
    bottom,
    ecpds_step,
    initial_configuration,
    minimal_phases,
    normalize_ordered,
    partition_rounds,
    step,
    validate_ordered,
    validate_phase,
    validate_scope,
)
from cpds.oracle import ExploreBounds, explore
from cpds.systems import replay

from conftest import fix3, fix_ph, fix_sc, s1, s2


def test_step_fix1(fix1):
    w = s2(s1("a", "_"))
    succs = step(fix1, Configuration("p", (w,)))
    assert [(r.dst, c.stacks[0]) for (r, _i, c) in succs] == [("q", s2(s1("_")))]
    assert step(fix1, Configuration("q", (bottom(2),))) == []


def test_ordered_filter_blocks_consuming():
    sysd = fix3()
    w1 = s2(s1("a", "_"))
    w2 = s2(s1("b", "_"))
    cfg = Configuration("q6", (w1, w2))
    # the stack-2 pop needs stack 1 empty
    assert not any(i == 1 for (_r, i, _c) in step(sysd, cfg))
    cfg2 = Configuration("q6", (bottom(2), w2))
    assert any(i == 1 for (_r, i, _c) in step(sysd, cfg2))


def test_step_determinism_per_rule():
    sysd = fix3()
    cfg = initial_configuration(sysd)
    succs = step(sysd, cfg)
    keys = [(repr(r), i) for (r, i, _c) in succs]
    assert len(keys) == len(set(keys))


def test_ecpds_step_singleton_and_pair():
    r = Rule("p", "a", ST.rew("b"), "q")
    sys1 = Cpds(2, {"a", "b"}, ["p", "q"],
                [], [ExtRule("p", "a", FiniteLanguage([[r]], "L"), "q")])
    w = s2(s1("a", "_"))
    succs = ecpds_step(sys1, Configuration("p", (w,)))
    assert [(c.control, c.stacks[0]) for (_r, _i, c) in succs] == [("q", s2(s1("b", "_")))]
    # two-step word: only the composite is observable
    r1 = Rule("p", "a", ST.rew("b"), "m")
    r2 = Rule("m", "b", ST.push("c", 2), "q")
    sys2 = Cpds(2, {"a", "b", "c"}, ["p", "m", "q"],
                [], [ExtRule("p", "a", FiniteLanguage([[r1, r2]], "L2"), "q")])
    succs = ecpds_step(sys2, Configuration("p", (w,)))
    assert len(succs) == 1
    (_r, _i, c) = succs[0]
    assert c.control == "q" and ST.top1(c.stacks[0]) == "c"
    # empty language contributes nothing
    sys3 = Cpds(2, {"a"}, ["p", "q"], [], [ExtRule("p", "a", FiniteLanguage([], "E"), "q")])
    assert ecpds_step(sys3, Configuration("p", (w,))) == []


def test_validate_ordered_runs():
    sysd = fix3()
    res = explore(sysd, bounds=ExploreBounds(30, 60, 10000))
    run = res.witnesses["q7"]
    assert replay(sysd, run)
    assert validate_ordered(run)
    blocked = explore(fix3().with_mode("unrestricted"), bounds=ExploreBounds(30, 60, 10000))
    assert validate_ordered(Run(initial_configuration(sysd)))  # empty run


def test_partition_rounds_greedy():
    start = Configuration("x", (bottom(2), bottom(2)))
    steps = [(None, i, start) for i in (0, 0, 1, 0)]
    rounds = partition_rounds(Run(start, steps))
    assert [len(r) for r in rounds] == [3, 1]
    assert partition_rounds(Run(start, [(None, 1, start), (None, 0, start)])) \
        == [[0], [1]]
    assert partition_rounds(Run(start)) == [[]]


def test_validate_scope_threshold():
    sysd = fix_sc()
    res = explore(sysd.with_mode("unrestricted"), bounds=ExploreBounds(20, 40, 4000))
    run = res.witnesses["c5"]
    assert validate_scope(run, 2)
    assert not validate_scope(run, 1)
    assert validate_scope(run, 3)


def test_validate_scope_copy_fresh_tag():
    rules = [Rule("x", "_", ST.copy(2), "y"), Rule("y", "_", ST.pop(2), "z")]
    sysd = Mcpds(2, {"a"}, ["x", "y", "z"], [rules], "single")
    res = explore(sysd.with_mode("unrestricted"), bounds=ExploreBounds(10, 20, 100))
    run = res.witnesses["z"]
    for zeta in (0, 1, 2):
        assert validate_scope(run, zeta)


def test_validate_phase_minimality():
    sysd = fix_ph()
    res = explore(sysd.with_mode("unrestricted"), bounds=ExploreBounds(20, 40, 4000))
    run = res.witnesses["p4"]
    assert minimal_phases(run) == 2
    assert validate_phase(run, 2) and not validate_phase(run, 1)
    empty = Run(initial_configuration(sysd))
    assert validate_phase(empty, 1)


def test_phase_scope_monotone():
    sysd = fix_ph()
    res = explore(sysd.with_mode("unrestricted"), bounds=ExploreBounds(20, 40, 4000))
    run = res.witnesses["p4"]
    for z in range(2, 6):
        assert validate_phase(run, z)
    sc = explore(fix_sc().with_mode("unrestricted"), bounds=ExploreBounds(20, 40, 4000))
    run2 = sc.witnesses["c5"]
    for zeta in range(2, 6):
        assert validate_scope(run2, zeta)


def test_normalize_ordered():
    # a stack-1 noop on the bottom symbol is rewritten via a scratch letter
    r1 = [Rule("p", "_", ST.noop(), "q")]
    r2 = [Rule("q", "_", ST.push("b", 2), "r")]
    sysd = Mcpds(2, {"b"}, ["p", "q", "r"], [r1, r2], "ordered")
    norm = normalize_ordered(sysd)
    for i in range(norm.stacks - 1):
        for r in norm.rule_sets[i]:
            if r.letter == ST.BOTTOM:
                assert r.op.kind in ("push", "pop", "collapse", "rew")
    # behaviour preserved
    start = Configuration("p", (bottom(2), bottom(2)))
    res = explore(norm, start, bounds=ExploreBounds(20, 40, 4000))
    assert "r" in res.witnesses
    # a copy on bottom of an earlier stack has no sound rewrite
    bad = Mcpds(2, {"b"}, ["p", "q"],
                [[Rule("p", "_", ST.copy(2), "q")], []], "ordered")
    with pytest.raises(NotNormalized):
        normalize_ordered(bad)


def test_clearing_rules_reach_empty():
    sysd = normalize_ordered(fix3())
    cleared, fin = add_clearing_rules(sysd, "q7")
    res = explore(cleared, bounds=ExploreBounds(40, 60, 30000))
    assert fin in res.witnesses
    final = res.witnesses[fin].final
    assert all(w == bottom(2) for w in final.stacks)


def test_configuration_arity():
    sysd = fix3()
    with pytest.raises(ArityMismatch):
        explore(sysd, Configuration("q0", (bottom(2),)))
