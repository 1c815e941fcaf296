"""Backward saturation: computing pre* for a single-stack system.

Starting from a P-automaton for the target set, the saturation function
adds long-form transitions derived from the system's rules until nothing
changes; the fixpoint accepts exactly the configurations with a run into
the target set.  Consuming rules contribute transitions built from chains
already in the automaton; generating rules rewrite an existing long-form
transition of the head control, possibly merging in set-form transitions
(the copy and push cases).

The default mode restricts additions to top-order target sets of size at
most one.  This is sound when the initial automaton is non-alternating at
the top order, which holds for every automaton this package constructs;
the unoptimised mode is a keyword away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .automata import LongForm, StackAutomaton, State, lf_key
from .errors import BudgetExceeded
from .stacks import BOTTOM
from .systems import Rule

__all__ = [
    "auxsat_consuming",
    "auxsat_generating",
    "satstep",
    "prestar",
    "SaturationStats",
    "ctl_state",
    "exp_tower",
    "non_alternating_top",
    "ExplicitRules",
]


def ctl_state(order: int, control, layer: int | None = None) -> State:
    """The canonical order-n state name of a control, without registering it."""
    name = ("q", control) if layer is None else ("q", control, layer)
    return State(order, name)


def exp_tower(levels: int, x: int, clamp: int = 10 ** 9) -> int:
    """``exp_0(x) = x`` and ``exp_{i+1}(x) = 2^{exp_i(x)}``, clamped."""
    v = x
    for _ in range(levels):
        if v >= 64:
            return clamp
        v = 2 ** v
    return min(v, clamp)


def saturation_cap(order: int, aut: StackAutomaton, rules_hint: int) -> int:
    """Generous hard cap on added transitions, shaped like the known bound."""
    base = aut.state_count() + len(aut.alphabet) + rules_hint + 8
    return exp_tower(max(order - 1, 1), base ** 3)


def non_alternating_top(aut: StackAutomaton) -> bool:
    """Operational stand-in for "non-alternating at the top order".

    Every top-order transition has at most one target and no annotation
    obligation sits at the top order: a top-order branch set would be
    merged into top-order target sets by the push case, creating the very
    alternation the optimised mode forbids.
    """
    n = aut.order
    for (_src, targets) in aut.delta_high.get(n, {}) if n >= 2 else ():
        if len(targets) > 1:
            return False
    if n == 1:
        for _src, slots in aut.delta1.items():
            for (_l, _b, targets) in slots:
                if len(targets) > 1:
                    return False
    for _src, slots in aut.delta1.items():
        for (_l, branch, _t) in slots:
            if branch and next(iter(branch)).order == n:
                return False
    return True


# ---------------------------------------------------------------------------
# Auxiliary saturation function
# ---------------------------------------------------------------------------


def auxsat_consuming(rule: Rule, aut: StackAutomaton, layer: int | None = None):
    """Long-form transitions contributed by a pop or collapse rule.

    Rules that can never fire because of the bottom-symbol conventions
    (popping or collapsing the bottom itself) contribute nothing.
    """
    n = aut.order
    op = rule.op
    if rule.letter == BOTTOM and (op.kind == "collapse" or (op.kind == "pop" and op.k == 1)):
        return []
    src = aut.peek_control(rule.src, layer)
    dst = aut.peek_control(rule.dst, layer)
    out = []
    empty = frozenset()
    if op.kind == "pop":
        k = op.k
        for label, sets in aut.k_prefixes(dst, k):
            targets = (empty,) * (k - 1) + (frozenset([label]),) + sets
            out.append(LongForm(src, rule.letter, empty, targets))
    elif op.kind == "collapse":
        k = op.k
        if k == n:
            out.append(LongForm(src, rule.letter, frozenset([dst]), (empty,) * n))
        else:
            for label, sets in aut.k_prefixes(dst, k):
                targets = (empty,) * k + sets
                out.append(LongForm(src, rule.letter, frozenset([label]), targets))
    else:
        raise ValueError(f"rule {rule!r} is not consuming")
    return out


def auxsat_generating(rule: Rule, t: LongForm, aut: StackAutomaton,
                      layer: int | None = None):
    """Long-form transitions contributed by a generating rule seen through ``t``.

    ``t`` must be headed by the rule's destination control; it need not be a
    transition of ``aut`` (the transition-automaton construction feeds
    candidates from outside), but the set-form transitions consulted for the
    copy and push cases always come from ``aut``.
    """
    n = aut.order
    op = rule.op
    src = aut.peek_control(rule.src, layer)
    out = []
    if op.kind == "noop":
        if t.letter == rule.letter:
            out.append(LongForm(src, rule.letter, t.branch, t.targets))
    elif op.kind == "rew":
        if rule.letter == BOTTOM:
            return out  # the bottom symbol is never rewritten
        if t.letter == op.letter:
            out.append(LongForm(src, rule.letter, t.branch, t.targets))
    elif op.kind == "copy":
        k = op.k
        if t.letter != rule.letter:
            return out
        for letter, branch2, tg2 in aut.set_form_chains(t.targets[k - 1], k):
            if letter != rule.letter:
                continue
            branch = t.branch | branch2
            orders = {b.order for b in branch}
            if len(orders) > 1:
                continue
            targets = tuple(t.targets[i] | tg2[i] for i in range(k - 1))
            targets += (tg2[k - 1],) + t.targets[k:]
            out.append(LongForm(src, rule.letter, branch, targets))
    elif op.kind == "push":
        k = op.k
        if t.letter != op.letter:
            return out
        if k == 1:
            if t.branch:
                return out
        elif t.branch and next(iter(t.branch)).order != k:
            return out
        for letter, branch2, tg2 in aut.set_form_chains(t.targets[0], 1):
            if letter != rule.letter:
                continue
            if k == 1:
                targets = (tg2[0],) + t.targets[1:]
            else:
                targets = (tg2[0],) + t.targets[1:k - 1]
                targets += (t.targets[k - 1] | t.branch,) + t.targets[k:]
            out.append(LongForm(src, rule.letter, branch2, targets))
    else:
        raise ValueError(f"rule {rule!r} is not generating")
    return out


# ---------------------------------------------------------------------------
# Rule sources
# ---------------------------------------------------------------------------


class ExplicitRules:
    """Rule source backed by explicit lists, indexed by destination control."""

    def __init__(self, rules, ext_rules=(), controls=()):
        self._by_dst = {}
        for r in sorted(rules):
            self._by_dst.setdefault(r.dst, []).append(r)
        self._ext_by_dst = {}
        for er in ext_rules:
            self._ext_by_dst.setdefault(er.dst, []).append(er)
        self.controls = list(controls)
        self.rule_count = len(list(rules)) + len(list(ext_rules))

    def rules_into(self, dst):
        return self._by_dst.get(dst, ())

    def ext_rules_into(self, dst):
        return self._ext_by_dst.get(dst, ())

    def seed_controls(self):
        return list(self.controls)


@dataclass
class SaturationStats:
    iterations: int = 0
    transitions_added: int = 0
    optimized: bool = False
    extended_queries: int = 0
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# The saturation step and its fixpoint
# ---------------------------------------------------------------------------


def _pass_candidates(source, aut, active, layer):
    """``(src, dst, long-form)`` triples one step application would add."""
    cand = []
    for c in active:
        for r in source.rules_into(c):
            if r.consuming:
                for t in auxsat_consuming(r, aut, layer):
                    cand.append((r.src, r.dst, t))
            else:
                head = aut.peek_control(r.dst, layer)
                for t0 in aut.long_forms_from(head):
                    for t in auxsat_generating(r, t0, aut, layer):
                        cand.append((r.src, r.dst, t))
    return cand


def _extended_candidates(source, aut, active, layer, stats):
    cand = []
    for c in active:
        for er in source.ext_rules_into(c):
            head_dst = aut.peek_control(er.dst, layer)
            src = aut.peek_control(er.src, layer)
            for t2 in aut.long_forms_from(head_dst):
                stats.extended_queries += 1
                for t in er.lang.initials(aut, t2):
                    if t.head == src and t.letter == er.letter:
                        cand.append((er.src, er.dst, t))
    return cand


def satstep(source, aut: StackAutomaton, *, optimized: bool = False,
            layer: int | None = None, extended: bool = False,
            stats: SaturationStats | None = None) -> tuple[StackAutomaton, int]:
    """One application of the saturation function: a new automaton.

    Candidates are computed against the input automaton only, so iterating
    ``satstep`` reproduces the A_{i+1} = step(A_i) sequence exactly.
    """
    stats = stats or SaturationStats()
    active = aut.control_states(layer)
    cand = _pass_candidates(source, aut, active, layer)
    if extended:
        cand.extend(_extended_candidates(source, aut, active, layer, stats))
    nxt = aut.copy()
    added = 0
    for src, dst, t in sorted(cand, key=lambda c: lf_key(c[2])):
        if optimized and len(t.targets[-1]) > 1:
            continue
        nxt.control_state(src, layer)
        nxt.control_state(dst, layer)
        if nxt.add_long_form(t):
            added += 1
    return nxt, added


def prestar(sys_or_rules, a0: StackAutomaton, *, optimized: bool | None = None,
            layer: int | None = None, check: bool = True,
            max_transitions: int | None = None,
            extended: bool = False) -> tuple[StackAutomaton, SaturationStats]:
    """Least saturation fixpoint over ``a0``.

    ``sys_or_rules`` is a single-stack system, an explicit rule list, or any
    object with ``rules_into``/``ext_rules_into``/``seed_controls``.  The
    returned automaton accepts pre* of ``L(a0)``.
    """
    source = _as_source(sys_or_rules)
    stats = SaturationStats(optimized=bool(optimized))
    if optimized is None:
        stats.optimized = non_alternating_top(a0)
    cap = max_transitions or saturation_cap(a0.order, a0, source.rule_count
                                            if hasattr(source, "rule_count") else 64)
    aut = a0.copy()
    for c in source.seed_controls():
        aut.control_state(c, layer)
    if check:
        aut.check_saturation_preconditions(
            [aut.require_control(c, layer) for c in aut.control_states(layer)]
        )
    while True:
        stats.iterations += 1
        # candidates are collected against the frozen pass input before any
        # mutation, so this reproduces iterated satstep without the copies
        active = aut.control_states(layer)
        cand = _pass_candidates(source, aut, active, layer)
        if extended:
            cand.extend(_extended_candidates(source, aut, active, layer, stats))
        added = 0
        for src_c, dst_c, t in sorted(cand, key=lambda c: lf_key(c[2])):
            if stats.optimized and len(t.targets[-1]) > 1:
                continue
            aut.control_state(src_c, layer)
            aut.control_state(dst_c, layer)
            if aut.add_long_form(t):
                added += 1
        stats.transitions_added += added
        if stats.transitions_added > cap:
            raise BudgetExceeded(
                f"saturation exceeded its transition cap ({cap})"
            )
        if added == 0:
            break
    return aut, stats


def prestar_eager(sys_or_rules, a0: StackAutomaton, *, optimized: bool | None = None,
                  layer: int | None = None,
                  max_transitions: int | None = None) -> StackAutomaton:
    """Alternative strategy: additions become visible within the pass.

    Reaches the same fixpoint as :func:`prestar`; kept as an oracle for the
    order-independence of the chaotic iteration.
    """
    source = _as_source(sys_or_rules)
    optimized = non_alternating_top(a0) if optimized is None else optimized
    aut = a0.copy()
    for c in source.seed_controls():
        aut.control_state(c, layer)
    cap = max_transitions or saturation_cap(a0.order, a0, 64)
    total = 0
    changed = True
    while changed:
        changed = False
        for c in list(aut.control_states(layer)):
            for r in source.rules_into(c):
                if r.consuming:
                    cand = auxsat_consuming(r, aut, layer)
                else:
                    head = aut.peek_control(r.dst, layer)
                    cand = []
                    for t in aut.long_forms_from(head):
                        cand.extend(auxsat_generating(r, t, aut, layer))
                for t in sorted(cand, key=lf_key):
                    if optimized and len(t.targets[-1]) > 1:
                        continue
                    aut.control_state(r.src, layer)
                    if aut.add_long_form(t):
                        total += 1
                        if total > cap:
                            raise BudgetExceeded("eager saturation exceeded cap")
                        changed = True
    return aut


def _as_source(sys_or_rules):
    if hasattr(sys_or_rules, "rules_into"):
        return sys_or_rules
    if hasattr(sys_or_rules, "rule_sets"):
        sys = sys_or_rules
        if sys.stacks != 1:
            raise ValueError("prestar saturates single-stack systems")
        return ExplicitRules(sys.rule_sets[0], sys.ext_rule_sets[0], sys.controls)
    return ExplicitRules(list(sys_or_rules), (), ())
