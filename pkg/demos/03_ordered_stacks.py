"""Ordered multi-stack reachability.

Two stacks cooperate: the first builds and tears down a little tower, the
second may only pop once the first is empty.  We decide reachability both
ways, then compute the full backward-reachable set and poke at it.
"""

import cpds.stacks as ST
from cpds import (
    Configuration,
    Mcpds,
    Rule,
    bottom,
    ordered_global,
    ordered_reachability,
)
from cpds.oracle import control_reachability_oracle

r1 = [
    Rule("q0", "_", ST.push("a", 2), "q1"),
    Rule("q2", "a", ST.copy(2), "q3"),
    Rule("q3", "a", ST.pop(1), "q4"),
    Rule("q4", "_", ST.pop(2), "q5"),
    Rule("q5", "a", ST.pop(1), "q6"),
]
r2 = [
    Rule("q1", "_", ST.push("b", 2), "q2"),
    Rule("q6", "b", ST.pop(1), "q7"),
]
sysd = Mcpds(2, {"a", "b"}, [f"q{i}" for i in range(8)], [r1, r2], "ordered")

print("reach q7 from q0:", ordered_reachability(sysd, "q0", "q7"))
print("reach q0 from q7:", ordered_reachability(sysd, "q7", "q0"))

# the bounded oracle agrees and produces the witness run
verdict = control_reachability_oracle(sysd, "q0", "q7")
print(f"oracle: {verdict.kind}, witness length "
      f"{len(verdict.witness.steps)} steps")

# every configuration that can still reach q7, as a regular set
gset = ordered_global(sysd, "q7")
print(f"global solution: {len(gset.tuples)} tuples")
bot = bottom(2)
probes = [
    Configuration("q0", (bot, bot)),
    Configuration("q6", (bot, ST.apply_op(ST.push("b", 2), bot))),
    Configuration("q6", (ST.apply_op(ST.push("a", 2), bot), bot)),
]
for cfg in probes:
    print("  member:", cfg.control, "->", gset.member(cfg))
