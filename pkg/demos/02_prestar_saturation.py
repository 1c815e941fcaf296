"""Backward saturation for a single-stack system.

We build a tiny system that pushes an annotated character, duplicates the
top stack and collapses back, then ask: from which configurations can the
control reach its final state with the stack emptied?  The answer comes
out as an automaton; we cross-check it against brute-force search.
"""

import cpds.stacks as ST
from cpds import Cpds, Rule, bottom, encode, exact_stack_automaton, prestar
from cpds.oracle import prestar_oracle

rules = [
    Rule("start", "_", ST.push("a", 2), "grow"),
    Rule("grow", "a", ST.copy(2), "dup"),
    Rule("dup", "a", ST.collapse(2), "back"),
    Rule("dup", "a", ST.pop(1), "shrink"),
    Rule("shrink", "_", ST.pop(2), "shrink"),
    Rule("shrink", "a", ST.pop(1), "done"),
]
sysd = Cpds(2, {"a"}, ["start", "grow", "dup", "back", "shrink", "done"], rules)

target = exact_stack_automaton(2, {"a"}, {"done": [bottom(2)]})
sat, stats = prestar(sysd, target)
print(f"saturation: {stats.iterations} passes, "
      f"{stats.transitions_added} transitions added, optimised={stats.optimized}")

print("start of every run:", sat.member("start", bottom(2)))

# compare against the enumeration oracle on every small configuration
members, indefinite = prestar_oracle(sysd, target, max_size=7)
agree = sum(
    sat.member(c.control, c.stacks[0]) == want for c, want in members.items()
)
print(f"oracle agreement: {agree}/{len(members)} configurations "
      f"(indefinite={indefinite})")

# a few members of pre*
shown = 0
for cfg, want in members.items():
    if want and shown < 5:
        print("  in pre*:", cfg.control, "|", encode(cfg.stacks[0]))
        shown += 1
