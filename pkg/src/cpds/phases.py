"""Phase-bounded reachability.

A run of a phase-bounded system splits into at most z segments, each
consuming from a single stack.  The solver enumerates the boundary
controls and per-phase popping stacks, then walks the phases backward.
One per-stack automaton tracks the possible stack contents at each phase
boundary: the automaton of the popping stack advances by saturating a
product system that models that stack faithfully while tracking, in its
control, one transition-automaton state per other stack; the remaining
automata advance by splicing in a guessed long-form transition whose
admissible values are read off the product solve rather than enumerated
blindly.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import stacks as ST
from .automata import StackAutomaton, State, accept_all_automaton, flat_key
from .errors import BudgetExceeded
from .extended import ta_predecessors
from .regular import RegTuple, RegularConfigSet
from .saturation import prestar
from .systems import Mcpds, Rule

__all__ = [
    "PhasePlan",
    "build_pbcpds",
    "phase_reachability",
    "phase_global",
    "PhaseLimits",
]


@dataclass(frozen=True)
class PhasePlan:
    """Guessed boundary controls q^0..q^z and popping stacks s_1..s_z."""

    boundaries: tuple
    popping: tuple

    def __post_init__(self):
        assert len(self.boundaries) == len(self.popping) + 1


@dataclass
class PhaseLimits:
    max_product_controls: int = 4000
    max_branches: int = 512


class _PbSource:
    """Lazy single-stack rule source for one phase of the product system.

    Controls: the phase's boundary controls plus pairs ``(control, ta)``
    where ``ta`` maps each non-popping stack index to a long-form
    transition over that stack's current automaton.
    """

    def __init__(self, sys: Mcpds, s: int, autos: dict, tprimes: dict,
                 q_prev, q_cur):
        self.sys = sys
        self.s = s
        self.autos = autos  # stack index -> StackAutomaton (j != s)
        self.tprimes = tprimes  # stack index -> LongForm (j != s)
        self.q_prev = q_prev
        self.q_cur = q_cur
        self.rule_count = sum(len(rs) for rs in sys.rule_sets) + 2
        self._into_s = {}
        for r in sys.rule_sets[s]:
            self._into_s.setdefault(r.dst, []).append(r)
        self._into_other = {}
        for j in range(sys.stacks):
            if j == s:
                continue
            for r in sys.rule_sets[j]:
                if r.consuming:
                    continue  # other stacks only generate during the phase
                self._into_other.setdefault(r.dst, []).append((j, r))

    def seed_controls(self):
        return [self.q_cur]

    def ext_rules_into(self, dst):
        return ()

    def _noop_preds(self, q, qdst, ta):
        """Simultaneous no-effect moves of all tracked components."""
        out = {}
        for j, t2 in ta:
            aut = self.autos[j]
            noop_rule = Rule(q, t2.letter, ST.noop(), qdst)
            preds = ta_predecessors(noop_rule, t2, aut)
            if not preds:
                return None
            out[j] = preds[0]
        return tuple((j, out[j]) for j, _t in ta)

    def rules_into(self, dst):
        out = []
        letters = list(self.sys.alphabet)
        if dst == self.q_cur:
            src = (self.q_cur, tuple(sorted(self.tprimes.items())))
            for a in letters:
                out.append(Rule(src, a, ST.noop(), self.q_cur))
            return out
        if not (isinstance(dst, tuple) and len(dst) == 2 and isinstance(dst[1], tuple)):
            return out
        q2, ta2 = dst
        # rules of the popping stack: apply for real, others move by noop
        for r in self._into_s.get(q2, ()):
            ta1 = self._noop_preds(r.src, r.dst, ta2)
            if ta1 is not None:
                out.append(Rule((r.src, ta1), r.letter, r.op, dst))
        # generating rules of other stacks: pure control moves
        for (j, r) in self._into_other.get(q2, ()):
            t2 = dict(ta2).get(j)
            if t2 is None:
                continue
            for t1 in ta_predecessors(r, t2, self.autos[j]):
                rest = tuple((jj, tt) for (jj, tt) in ta2 if jj != j)
                ta1 = self._noop_preds(r.src, r.dst, rest)
                if ta1 is None:
                    continue
                merged = tuple(sorted(ta1 + ((j, t1),)))
                for a in letters:
                    out.append(Rule((r.src, merged), a, ST.noop(), dst))
        return out


def build_pbcpds(sys: Mcpds, s: int, autos: dict, tprimes: dict, q_prev, q_cur):
    """The product system for one phase; see :class:`_PbSource`.

    ``autos`` and ``tprimes`` map every non-popping stack index to its
    current automaton and guessed final transition.  Returned as a lazy
    rule source consumable by the saturation engine.
    """
    return _PbSource(sys, s, autos, tprimes, q_prev, q_cur)


class _PhaseSolver:
    def __init__(self, sys: Mcpds, z: int, limits: PhaseLimits | None):
        if not (isinstance(sys.mode, tuple) and sys.mode[0] == "phase"):
            sys = sys.with_mode(("phase", z))
        self.sys = sys
        self.z = z
        self.limits = limits or PhaseLimits()
        self._fresh = 0

    def seed_autos(self, q_last):
        a = accept_all_automaton(self.sys.order, self.sys.alphabet,
                                 self.sys.controls, [q_last])
        return {j: a.copy() for j in range(self.sys.stacks)}

    def _clean_copy(self, aut: StackAutomaton) -> StackAutomaton:
        """Copy with control mappings restricted to the declared controls.

        Product controls of an earlier phase's solve must not leak into the
        next product's rule enumeration.
        """
        a = aut.copy()
        keep = set(self.sys.controls)
        a.controls = {k: v for k, v in a.controls.items() if k in keep}
        return a

    def _fresh_ctl(self, aut: StackAutomaton, control) -> State:
        self._fresh += 1
        s = State(aut.order, ("q", control, ("g", self._fresh)))
        aut.remap_control(control, s)
        return s

    def step_back(self, autos: dict, q_prev, q_cur, s: int):
        """All per-stack automata vectors one phase earlier.

        Yields dictionaries mapping stack index to its new automaton; the
        branching covers the guessed final transitions of the non-popping
        stacks and the admissible entry vectors of the product solve.
        """
        m = self.sys.stacks
        others = [j for j in range(m) if j != s]
        tprime_options = []
        for j in others:
            aut = autos[j]
            head = aut.peek_control(q_cur)
            opts = aut.long_forms_from(head)
            if not opts:
                return
            tprime_options.append(opts)
        count = 0
        for choice in _product(tprime_options):
            tprimes = dict(zip(others, choice))
            source = build_pbcpds(self.sys, s, autos, tprimes, q_prev, q_cur)
            base = self._clean_copy(autos[s])
            try:
                sat, _ = prestar(
                    source, base, check=False,
                    max_transitions=self.limits.max_product_controls,
                )
            except BudgetExceeded:
                continue
            for ta in self._admissible_entries(sat, q_prev):
                count += 1
                if count > self.limits.max_branches:
                    raise BudgetExceeded("phase branching budget exceeded")
                new_autos = {}
                # popping stack: re-root on the entry vector's product state
                entry_state = sat.require_control((q_prev, ta))
                lfs = sat.long_forms_from(entry_state)
                if not lfs:
                    continue
                spliced = self._clean_copy(sat)
                root = self._fresh_ctl(spliced, q_prev)
                for t in lfs:
                    spliced.add_long_form(t.rehead(root))
                new_autos[s] = spliced
                # other stacks: splice the guessed initial transition
                for (j, x) in ta:
                    a2 = self._clean_copy(autos[j])
                    root_j = self._fresh_ctl(a2, q_prev)
                    a2.add_long_form(x.rehead(root_j))
                    new_autos[j] = a2
                if set(new_autos) == set(range(m)):
                    yield new_autos

    def _admissible_entries(self, sat: StackAutomaton, q_prev):
        out = []
        for key, state in sat.controls.items():
            if not (isinstance(key, tuple) and len(key) == 2
                    and isinstance(key[1], tuple)):
                continue
            if key[0] != q_prev:
                continue
            if sat.long_forms_from(state):
                out.append(key[1])
        out.sort(key=flat_key)
        return out

    def solve(self, q_in, q_out, want_global: bool):
        """Iterate plans; for reachability stop at the first witness."""
        m = self.sys.stacks
        controls = list(self.sys.controls)
        results = RegularConfigSet(self.sys.order, m)
        found = False
        for plan in self._plans(q_in, q_out):
            frontier = [self.seed_autos(plan.boundaries[-1])]
            for i in range(self.z, 0, -1):
                q_prev, q_cur = plan.boundaries[i - 1], plan.boundaries[i]
                s = plan.popping[i - 1]
                nxt = []
                for autos in frontier:
                    nxt.extend(self.step_back(autos, q_prev, q_cur, s))
                frontier = nxt
                if not frontier:
                    break
            q0 = plan.boundaries[0]
            for autos in frontier:
                bot = ST.bottom(self.sys.order)
                if all(autos[j].member(q0, bot) for j in range(m)):
                    found = True
                    if not want_global:
                        return True, results
                if want_global:
                    results.add(RegTuple(
                        q0,
                        tuple(autos[j] for j in range(m)),
                        tuple(autos[j].require_control(q0) for j in range(m)),
                    ))
        return found, results

    def _plans(self, q_in, q_out):
        controls = list(self.sys.controls)
        starts = [q_in] if q_in is not None else controls
        for q0 in starts:
            for mids in _tuples(controls, self.z - 1):
                bounds = (q0,) + mids + (q_out,)
                for pops in _tuples(list(range(self.sys.stacks)), self.z):
                    yield PhasePlan(bounds, pops)


def _tuples(items, k):
    if k == 0:
        yield ()
        return
    for head in items:
        for rest in _tuples(items, k - 1):
            yield (head,) + rest


def _product(options):
    if not options:
        yield ()
        return
    head, *rest = options
    for h in head:
        for r in _product(rest):
            yield (h,) + r


def phase_reachability(sys: Mcpds, z: int, q_in, q_out,
                       limits: PhaseLimits | None = None) -> bool:
    """Is ``q_out`` reachable from the all-empty configuration at ``q_in``
    within ``z`` phases?"""
    if q_in == q_out:
        return True
    if z < 1:
        return False
    solver = _PhaseSolver(sys, z, limits)
    found, _ = solver.solve(q_in, q_out, want_global=False)
    return found


def phase_global(sys: Mcpds, z: int, q_out,
                 limits: PhaseLimits | None = None) -> RegularConfigSet:
    """Tuples covering every configuration reaching ``q_out`` in <= z phases."""
    if z < 1:
        raise BudgetExceeded("phase bound must be at least 1")
    solver = _PhaseSolver(sys, z, limits)
    _, results = solver.solve(None, q_out, want_global=True)
    return results
