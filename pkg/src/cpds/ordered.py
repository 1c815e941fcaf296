"""Reachability for ordered multi-stack systems.

The ordered discipline lets stack i consume only while all stacks j < i
are empty, which makes runs decompose around the moments the first m-1
stacks are simultaneously empty.  The solver follows that decomposition:

* a *left automaton* (an input-reading system over the first m-1 stacks)
  replays the segments where some earlier stack is non-empty, tracking the
  top character of the last stack in its control and emitting the
  generating effects on the last stack as input letters;
* a *right system* (single-stack, extended) models the last stack
  faithfully and swallows each such segment as one extended rule whose
  language is the left automaton's emission language for the segment;
* the extended saturation's language queries -- does the emission language
  meet the transition automaton between two candidate long-form
  transitions -- reduce to ordered reachability of a *product* of the left
  automaton with the transition automaton, one stack fewer, closing the
  recursion over the stack count.

Control-state reachability is first reduced to reaching the all-empty
configuration by appending nondeterministic clearing rules.  The global
solver descends once more: each (exit control, final transition) guess
spawns a product that tracks the last stack's transition automaton in the
control, whose recursive global solution is spliced back stack by stack.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import stacks as ST
from .automata import LongForm, StackAutomaton, flat_key, lf_key
from .errors import BudgetExceeded, NotNormalized, RecursionDepthExceeded
from .extended import memo_put, state_control, ta_predecessors
from .regular import RegTuple, RegularConfigSet
from .saturation import prestar
from .stacks import BOTTOM
from .systems import (
    Configuration,
    ExtRule,
    Mcpds,
    Rule,
    add_clearing_rules,
    normalize_ordered,
)
from .automata import exact_stack_automaton

__all__ = [
    "CpdaRule",
    "LeftCpda",
    "CpdaLang",
    "build_leftcpda",
    "build_rightcpds",
    "build_langcheckcpds",
    "ordered_reachability",
    "ordered_global",
    "OrderedLimits",
]


@dataclass(frozen=True)
class CpdaRule:
    """An input-reading rule: fires like a plain rule, emitting ``inp``."""

    src: object
    letter: str
    inp: Rule
    op: ST.Op
    dst: object

    def __lt__(self, other):
        return flat_key(
            (self.src, self.letter, repr(self.inp), repr(self.op), self.dst)
        ) < flat_key(
            (other.src, other.letter, repr(other.inp), repr(other.op), other.dst)
        )


@dataclass
class OrderedLimits:
    max_product_controls: int = 4000
    max_depth: int = 8


class LeftCpda:
    """The (m-1)-stack automaton tracking the last stack's top character.

    Controls are pairs ``(control, letter)``; the input alphabet is the set
    of generating rules of the original system.  Rules of earlier stacks
    are lifted with a no-effect input recording the control change; rules
    of the last stack become pure control moves emitting themselves.
    """

    def __init__(self, order, alphabet, rule_sets):
        self.order = order
        self.alphabet = alphabet
        self.rule_sets = rule_sets  # per remaining stack: list of CpdaRule
        self._into = []
        for rs in rule_sets:
            idx = {}
            for r in rs:
                idx.setdefault(r.dst, []).append(r)
            self._into.append(idx)

    @property
    def stacks(self):
        return len(self.rule_sets)

    def rules_into_pair(self, stack_index, dst_pair):
        return self._into[stack_index].get(dst_pair, ())


def build_leftcpda(sys: Mcpds) -> LeftCpda:
    """Mirror of the defining rule families; requires the bottom normal form."""
    _require_normalized(sys)
    m = sys.stacks
    letters = list(sys.alphabet)
    rule_sets = [[] for _ in range(m - 1)]
    # earlier-stack rules: lifted pointwise, input records the control change
    for i in range(m - 1):
        for r in sys.rule_sets[i]:
            for a in letters:
                inp = Rule(r.src, a, ST.noop(), r.dst)
                rule_sets[i].append(
                    CpdaRule((r.src, a), r.letter, inp, r.op, (r.dst, a))
                )
    # last-stack generating rules: control moves updating the tracked letter
    for r in sys.rule_sets[m - 1]:
        if r.consuming:
            continue
        if r.op.kind == "rew":
            tracked = r.op.letter
        elif r.op.kind == "push":
            tracked = r.op.letter
        else:  # copy or noop keep the top character
            tracked = r.letter
        for b in letters:
            rule_sets[0].append(CpdaRule((r.src, r.letter), b, r, ST.noop(), (r.dst, tracked)))
    for rs in rule_sets:
        rs.sort()
    return LeftCpda(sys.order, sys.alphabet, rule_sets)


def _require_normalized(sys: Mcpds):
    m = sys.stacks
    for i in range(m - 1):
        for r in sys.rule_sets[i]:
            if r.letter != BOTTOM:
                continue
            if r.op.kind == "push" and r.op.k == sys.order:
                continue
            if r.op.kind in ("pop", "collapse", "rew"):
                continue  # cannot fire on an empty stack
            raise NotNormalized(f"bottom rule {r!r} on stack {i + 1}")


# ---------------------------------------------------------------------------
# The product of the left automaton with a transition automaton
# ---------------------------------------------------------------------------


class _ProductSource:
    """Lazy rule source for the langcheck product, enumerated backward.

    Controls are ``(control, long-form)`` pairs plus whatever entry/exit
    sentinels the caller installs; the product steps simultaneously in the
    left automaton (its tracked letter is the long-form's letter) and in
    the transition automaton over ``aut``.
    """

    def __init__(self, left: LeftCpda, aut: StackAutomaton):
        self.left = left
        self.aut = aut
        self.extra_into = {}  # control -> list of (stack_index, Rule)

    def rules_into(self, dst):
        out = list(self.extra_into.get(flat_key(dst), ()))
        if isinstance(dst, tuple) and len(dst) == 2 and isinstance(dst[1], LongForm):
            q2, t2 = dst
            for j in range(self.left.stacks):
                for cr in self.left.rules_into_pair(j, (q2, t2.letter)):
                    for t1 in ta_predecessors(cr.inp, t2, self.aut):
                        src = (cr.src[0], t1)
                        out.append((j, Rule(src, cr.letter, cr.op, dst)))
        return out


def _materialize(source, order, alphabet, stacks, seeds, limit) -> Mcpds:
    """Backward closure of a lazy multi-stack rule source into an Mcpds."""
    controls = {}
    for s in seeds:
        controls[flat_key(s)] = s
    queue = list(seeds)
    rule_sets = [[] for _ in range(stacks)]
    while queue:
        dst = queue.pop(0)
        for (j, rule) in source.rules_into(dst):
            rule_sets[j].append(rule)
            k = flat_key(rule.src)
            if k not in controls:
                if len(controls) >= limit:
                    raise BudgetExceeded("product control budget exceeded")
                controls[k] = rule.src
                queue.append(rule.src)
    return Mcpds(order, alphabet, list(controls.values()),
                 [sorted(set(rs)) for rs in rule_sets], "ordered")


def build_langcheckcpds(left: LeftCpda, aut: StackAutomaton, t: LongForm,
                        tprime: LongForm, push_letter: str, stack_index: int,
                        limit: int = 4000):
    """The entry/exit product for one emptiness query.

    Entry pushes the segment's bottom push onto the chosen stack and moves
    to ``(q1, t)``; exit steps from ``(q2, t')`` to the exit sentinel.  The
    exit is restricted to the query's final transition ``t'``.  Returns
    ``(system, enter, exit)`` with the product materialised backward from
    the exit.
    """
    q1 = state_control(t.head)
    q2 = state_control(tprime.head)
    enter, leave = ("enter",), ("exit",)
    src = _ProductSource(left, aut)
    src.extra_into[flat_key(leave)] = [
        (stack_index, Rule((q2, tprime), BOTTOM, ST.noop(), leave))
    ]
    src.extra_into[flat_key((q1, t))] = [
        (stack_index, Rule(enter, BOTTOM, ST.push(push_letter, left.order), (q1, t)))
    ]
    sysm = _materialize(src, left.order, left.alphabet, left.stacks, [leave], limit)
    return sysm, enter, leave


class CpdaLang:
    """Language handle for one segment family of the right system.

    Stands for the words emitted by the left automaton from
    ``((q1, a), push at stack i)`` to ``((q2, _), all empty)``, prefixed by
    the no-effect rule recording the original bottom push's control change.
    Decisions and batch queries go through the product construction and the
    recursive ordered solver.
    """

    def __init__(self, solver, left: LeftCpda, prefix: Rule, q1, a, q2, b, i):
        self.solver = solver
        self.left = left
        self.prefix = prefix
        self.q1, self.a, self.q2, self.b, self.i = q1, a, q2, b, i
        self._memo = {}

    def __repr__(self):
        return f"L[{self.q1},{self.a}->{self.q2};push {self.b}@{self.i + 1}]"

    def words(self):
        from .errors import LanguageQueryFailure

        raise LanguageQueryFailure("segment languages are not enumerable")

    def _batch(self, aut: StackAutomaton, t2: LongForm):
        key = (aut.uid, aut.transition_count(), aut.state_count(), t2.key)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if state_control(t2.head) != self.q2:
            return memo_put(self._memo, key, [])
        valid = self.solver.langcheck_batch(self.left, aut, self.q1, self.a, t2,
                                            self.b, self.i)
        return memo_put(self._memo, key, valid)

    def initials(self, aut: StackAutomaton, t2: LongForm, layer=None):
        out = {}
        for x in self._batch(aut, t2):
            for t in ta_predecessors(self.prefix, x, aut):
                out[t.key] = t
        return [out[k] for k in sorted(out)]

    def decide(self, aut: StackAutomaton, t: LongForm, t2: LongForm) -> bool:
        return any(x == t for x in self.initials(aut, t2))


def build_rightcpds(sys: Mcpds, solver: "OrderedSolver | None" = None):
    """Single-stack extended system over the last stack.

    Plain rules are the last stack's rules verbatim; for every bottom push
    opening a segment on an earlier stack, one extended rule per top letter
    and exit control carries the corresponding segment language.
    """
    solver = solver or OrderedSolver()
    _require_normalized(sys)
    m = sys.stacks
    left = build_leftcpda(sys)
    ext = []
    letters = list(sys.alphabet)
    for i in range(m - 1):
        for r in sys.rule_sets[i]:
            if r.letter != BOTTOM or r.op.kind != "push":
                continue
            for a in letters:
                for q2 in sys.controls:
                    prefix = Rule(r.src, a, ST.noop(), r.dst)
                    lang = CpdaLang(solver, left, prefix, r.dst, a, q2,
                                    r.op.letter, i)
                    ext.append(ExtRule(r.src, a, lang, q2))
    return Mcpds(sys.order, sys.alphabet, sys.controls,
                 [sys.rule_sets[m - 1]], "single", [tuple(ext)])


# ---------------------------------------------------------------------------
# The solver
# ---------------------------------------------------------------------------


class OrderedSolver:
    def __init__(self, limits: OrderedLimits | None = None):
        self.limits = limits or OrderedLimits()
        self.stats = {"saturations": 0, "products": 0, "batch_queries": 0,
                      "product_solves": 0}
        self._gset_memo = {}

    # -- language queries ---------------------------------------------------

    def _product_global(self, left: LeftCpda, aut: StackAutomaton,
                        tprime: LongForm) -> RegularConfigSet:
        """Global solution of the product, memoised per (automaton, t').

        Every language handle over the same final transition shares this
        solve; the handle-specific entry control, letter, and pushed stack
        are membership filters on the result.
        """
        key = (id(left), aut.uid, aut.transition_count(), aut.state_count(),
               tprime.key)
        hit = self._gset_memo.get(key)
        if hit is not None:
            return hit
        self.stats["product_solves"] += 1
        q2 = state_control(tprime.head)
        src = _ProductSource(left, aut)
        target = (q2, tprime)
        sysm = _materialize(src, left.order, left.alphabet, left.stacks,
                            [target], self.limits.max_product_controls)
        if sysm.stacks > 1:
            sysm = normalize_ordered(sysm)
        gset = self.empty_global(sysm, target, depth=left.stacks)
        from .extended import memo_put

        return memo_put(self._gset_memo, key, gset)

    def langcheck_batch(self, left: LeftCpda, aut: StackAutomaton, q1, a,
                        tprime: LongForm, push_letter: str, stack_index: int):
        """All TA-initial transitions t with head control q1 and letter ``a``
        whose product with the left automaton reaches the exit."""
        self.stats["batch_queries"] += 1
        gset = self._product_global(left, aut, tprime)
        entry = tuple(
            ST.apply_op(ST.push(push_letter, left.order), ST.bottom(left.order))
            if j == stack_index else ST.bottom(left.order)
            for j in range(left.stacks)
        )
        out = []
        for ctl in gset.controls():
            if not (isinstance(ctl, tuple) and len(ctl) == 2
                    and isinstance(ctl[1], LongForm)):
                continue
            if ctl[0] != q1 or ctl[1].letter != a:
                continue
            if gset.member(Configuration(ctl, entry)):
                out.append(ctl[1])
        out.sort(key=lf_key)
        return out

    # -- global solver ------------------------------------------------------

    def empty_global(self, sys: Mcpds, target_control, depth) -> RegularConfigSet:
        """Tuples covering every configuration reaching ``(target, all-empty)``.

        ``sys`` must be ordered and bottom-normalized.  Controls introduced
        by normalisation of inner products are kept in the result; callers
        filter to the controls they care about.
        """
        if depth < 0:
            raise RecursionDepthExceeded("ordered recursion exceeded stack count")
        m = sys.stacks
        n = sys.order
        a0 = exact_stack_automaton(n, sys.alphabet,
                                   {target_control: [ST.bottom(n)]})
        out = RegularConfigSet(n, m)
        if m == 1:
            single = Mcpds(n, sys.alphabet, sys.controls, sys.rule_sets, "single")
            b, _ = prestar(single, a0)
            self.stats["saturations"] += 1
            for q in sys.controls:
                if b.has_control(q):
                    out.add(RegTuple(q, (b,), (b.require_control(q),)))
            return out
        right = build_rightcpds(sys, self)
        from .extended import prestar_extended

        bm, _ = prestar_extended(right, a0)
        self.stats["saturations"] += 1
        bot_aut = exact_stack_automaton(n, sys.alphabet, {"root": [ST.bottom(n)]})
        bot_init = bot_aut.require_control("root")
        for q in sys.controls:
            if bm.has_control(q):
                out.add(RegTuple(
                    q,
                    (bot_aut,) * (m - 1) + (bm,),
                    (bot_init,) * (m - 1) + (bm.require_control(q),),
                ))
        # descend: guess the exit control and final transition of the last
        # stack, track its transition automaton in the control of a product
        # over the remaining stacks, and splice the recursive solution
        left = build_leftcpda(sys)
        for q2 in sys.controls:
            if not bm.has_control(q2):
                continue
            for tprime in bm.long_forms_from(bm.require_control(q2)):
                sub = self._descend(sys, left, bm, q2, tprime, depth)
                for tup in sub.tuples:
                    ctl = tup.control
                    if not (isinstance(ctl, tuple) and len(ctl) == 2
                            and isinstance(ctl[1], LongForm)):
                        continue
                    q, x = ctl
                    spliced = self._splice(bm, x)
                    out.add(RegTuple(
                        q,
                        tup.autos + (spliced[0],),
                        tup.initials + (spliced[1],),
                    ))
        return out

    def _descend(self, sys, left, bm, q2, tprime, depth) -> RegularConfigSet:
        self.stats["products"] += 1
        src = _ProductSource(left, bm)
        target = (q2, tprime)
        sysm = _materialize(src, sys.order, sys.alphabet, sys.stacks - 1,
                            [target], self.limits.max_product_controls)
        sysm = normalize_ordered(sysm) if sysm.stacks > 1 else sysm
        return self.empty_global(sysm, target, depth - 1)

    @staticmethod
    def _splice(bm: StackAutomaton, x: LongForm):
        """``bm`` with ``x`` re-rooted at a fresh designated initial state."""
        a = bm.copy()
        from .automata import State

        s = a.add_state(State(a.order, ("splice", x.key)))
        a.add_long_form(x.rehead(s))
        return a, s


def _prepare(sys: Mcpds):
    if sys.mode != "ordered":
        raise NotNormalized("ordered solver expects an ordered-mode system")
    return normalize_ordered(sys)


def ordered_reachability(sys: Mcpds, q_in, q_out,
                         limits: OrderedLimits | None = None) -> bool:
    """Can the all-empty configuration at ``q_in`` reach control ``q_out``?"""
    solver = OrderedSolver(limits)
    norm = _prepare(sys)
    cleared, fin = add_clearing_rules(norm, q_out)
    m = cleared.stacks
    n = cleared.order
    a0 = exact_stack_automaton(n, cleared.alphabet, {fin: [ST.bottom(n)]})
    if m == 1:
        single = Mcpds(n, cleared.alphabet, cleared.controls, cleared.rule_sets,
                       "single")
        b, _ = prestar(single, a0)
        return b.has_control(q_in) and b.member(q_in, ST.bottom(n))
    right = build_rightcpds(cleared, solver)
    from .extended import prestar_extended

    bm, _ = prestar_extended(right, a0)
    return bm.has_control(q_in) and bm.member(q_in, ST.bottom(n))


def ordered_global(sys: Mcpds, q_out,
                   limits: OrderedLimits | None = None) -> RegularConfigSet:
    """All configurations (over the declared controls) that can reach ``q_out``."""
    solver = OrderedSolver(limits)
    norm = _prepare(sys)
    cleared, fin = add_clearing_rules(norm, q_out)
    full = solver.empty_global(cleared, fin, depth=cleared.stacks)
    out = RegularConfigSet(sys.order, sys.stacks)
    declared = set(sys.controls)
    for t in full.tuples:
        if t.control in declared:
            out.add(t)
    return out
