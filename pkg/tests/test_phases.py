import cpds.stacks as ST
from cpds import (
    Configuration,
    Mcpds,
    Rule,
    bottom,
    build_pbcpds,
    phase_global,
    phase_reachability,
)
from cpds.oracle import (
    ExploreBounds,
    RandomProfile,
    control_reachability_oracle,
    enumerate_stacks,
    explore,
    gen_random_system,
)

from conftest import fix_ph


def test_fix_ph_threshold():
    sysd = fix_ph()
    assert phase_reachability(sysd, 1, "p0", "p4") is False
    assert phase_reachability(sysd, 2, "p0", "p4") is True
    assert phase_reachability(sysd, 3, "p0", "p4") is True


def test_zero_length_run():
    sysd = fix_ph()
    assert phase_reachability(sysd, 1, "p0", "p0") is True
    assert phase_reachability(sysd, 0, "p0", "p0") is True


def test_pbcpds_rule_families():
    from cpds.automata import accept_all_automaton

    sysd = fix_ph()
    autos = {1: accept_all_automaton(2, sysd.alphabet, sysd.controls, ["p4"])}
    head = autos[1].require_control("p4")
    tprimes = {1: autos[1].long_forms_from(head)[0]}
    src = build_pbcpds(sysd, 0, autos, tprimes, "p0", "p4")
    # exit family: one rule per letter into the exit control
    exits = src.rules_into("p4")
    assert {r.letter for r in exits} == set(sysd.alphabet)
    assert all(r.op == ST.noop() for r in exits)
    exit_src = exits[0].src
    assert exit_src[0] == "p4" and dict(exit_src[1])[1] == tprimes[1]
    # popping-stack rules keep their operation; tracked components move
    inner = src.rules_into(exit_src)
    own = [r for r in inner if not r.op == ST.noop()]
    for r in own:
        assert r.op in {x.op for x in sysd.rule_sets[0]}
    # generating rules of the other stack appear as pure control moves
    other = [r for r in inner if r.op == ST.noop()]
    assert all(isinstance(r.src, tuple) for r in other)


def test_degenerate_product_single_stack_rules():
    # when only the popping stack has rules the product carries just those
    # moves (all tracked components step by reheads)
    r1 = [Rule("x", "_", ST.push("a", 2), "y")]
    sysd = Mcpds(2, {"a"}, ["x", "y"], [r1, []], ("phase", 1))
    assert phase_reachability(sysd, 1, "x", "y") is True
    assert phase_reachability(sysd, 1, "y", "x") is False


def test_phase_random_differential_and_monotone():
    decided = 0
    for seed in range(12):
        prof = RandomProfile(order=2, controls=3, letters=2, stacks=2,
                             rules=6, mode="unrestricted")
        sysd = gen_random_system(seed, prof)
        q_in, q_out = sysd.controls[0], sysd.controls[-1]
        prev = False
        for z in (1, 2, 3):
            v = control_reachability_oracle(
                sysd.with_mode(("phase", z)), q_in, q_out,
                ExploreBounds(40, 60, 30000),
            )
            if v.kind == "unreachable-within-bounds":
                continue
            got = phase_reachability(sysd, z, q_in, q_out)
            assert got == v.definitely_reachable, (seed, z)
            assert not (prev and not got), (seed, z, "monotonicity")
            prev = got
            decided += 1
    assert decided >= 30


def test_phase_global_membership():
    sysd = fix_ph()
    gset = phase_global(sysd, 2, "p4")
    bot = bottom(2)
    assert gset.member(Configuration("p0", (bot, bot)))
    assert gset.member(Configuration("p4", (bot, bot)))
    pool = enumerate_stacks(2, {"a", "b"}, 6)
    for q in sysd.controls:
        for w1 in pool[:10]:
            for w2 in pool[:10]:
                cfg = Configuration(q, (w1, w2))
                res = explore(sysd.with_mode(("phase", 2)), cfg,
                              ExploreBounds(30, 50, 8000))
                if not res.closed:
                    continue
                assert gset.member(cfg) == res.reachable("p4"), cfg


def test_phase_global_isolated_target_empty():
    r1 = [Rule("x", "_", ST.push("a", 2), "x")]
    sysd = Mcpds(2, {"a"}, ["x", "z"], [r1, []], ("phase", 2))
    gset = phase_global(sysd, 2, "z")
    # only z itself can "reach" z
    assert gset.member(Configuration("z", (bottom(2), bottom(2))))
    assert not gset.member(Configuration("x", (bottom(2), bottom(2))))
