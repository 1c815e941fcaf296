"""The bounded oracle, and how the test suite earns its confidence.

Every solver in this package is checked against brute force: random small
systems are generated from a seed, explored exhaustively within budgets,
and compared verdict-for-verdict.  A verdict only counts when the
exploration closed (no budget was hit).  This script runs a miniature
version of that loop for the ordered solver.
"""

from cpds import ordered_reachability
from cpds.oracle import (
    ExploreBounds,
    RandomProfile,
    control_reachability_oracle,
    gen_random_system,
)

profile = RandomProfile(order=2, controls=3, letters=2, stacks=2,
                        rules=6, mode="ordered")
bounds = ExploreBounds(max_steps=40, max_stack_size=60, max_configs=20000)

decided = skipped = 0
for seed in range(12):
    sysd = gen_random_system(seed, profile)
    q_in, q_out = sysd.controls[0], sysd.controls[-1]
    verdict = control_reachability_oracle(sysd, q_in, q_out, bounds)
    if verdict.kind == "unreachable-within-bounds":
        skipped += 1
        print(f"seed {seed:2d}: exploration did not close - skipped")
        continue
    got = ordered_reachability(sysd, q_in, q_out)
    agree = got == verdict.definitely_reachable
    decided += 1
    print(f"seed {seed:2d}: oracle={verdict.kind:20s} solver={got} "
          f"{'ok' if agree else 'DIVERGENCE'}")
    assert agree

print(f"\n{decided} decided, {skipped} skipped, no divergences")
