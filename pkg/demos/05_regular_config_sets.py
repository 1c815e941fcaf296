"""The algebra of regular configuration sets.

Solver outputs are finite unions of (control, per-stack automaton) tuples.
They support union, intersection, membership and emptiness with witnesses;
this script builds two small sets by hand and exercises the laws.
"""

import random

from cpds import (
    Configuration,
    RegTuple,
    RegularConfigSet,
    bottom,
    exact_stack_automaton,
)
from cpds.oracle import enumerate_stacks

pool = enumerate_stacks(2, {"a", "b"}, 6)
rng = random.Random(0)


def singleton(control, w1, w2):
    a1 = exact_stack_automaton(2, {"a", "b"}, {"s": [w1]})
    a2 = exact_stack_automaton(2, {"a", "b"}, {"s": [w2]})
    return RegularConfigSet(2, 2, [RegTuple(
        control, (a1, a2), (a1.require_control("s"), a2.require_control("s"))
    )])


bot = bottom(2)
s_one = singleton("p", bot, pool[5])
s_two = singleton("p", bot, pool[9]).union(singleton("q", pool[3], bot))

u = s_one.union(s_two)
i = s_one.intersect(s_two)
print(f"union has {len(u.tuples)} tuples, intersection {len(i.tuples)}")

laws_hold = True
for _ in range(300):
    cfg = Configuration(rng.choice(["p", "q"]),
                        (rng.choice(pool), rng.choice(pool)))
    laws_hold &= u.member(cfg) == (s_one.member(cfg) or s_two.member(cfg))
    laws_hold &= i.member(cfg) == (s_one.member(cfg) and s_two.member(cfg))
print("membership laws on 300 samples:", laws_hold)

print("intersection empty:", i.is_empty())
w = u.witness()
print("union witness:", w.control, "- member:", u.member(w))

try:
    u.complement()
except Exception as e:
    print("complement:", type(e).__name__, "-", e)
