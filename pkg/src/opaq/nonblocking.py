"""Nonblocking verification, monolithic and compositional.

The compositional loop repeatedly composes two intermediates, hides events
no other intermediate uses, and reduces the result by marking-uniform weak
bisimulation.  Every intermediate remembers how it was built so a
counterexample found on an abstraction can be replayed back to a trace of
the original components.
"""

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .abstraction import marking_observation_equivalence
from .automaton import (
    TAU,
    TAU_INDEX,
    Automaton,
    ModelError,
    PairEvent,
    hide,
    quotient,
    remove_tau_selfloops,
    restrict,
    reverse,
    weak_step,
)
from .compose import BudgetExceeded, ModularSystem, sync_all
from .observers import oracle_kstep
from .verdict import Counterexample, Diagnosis, is_psi, parse_k, psi_index


@dataclass
class NonblockingResult:
    blocking: bool
    counterexample: Optional[Counterexample] = None
    stats: dict = field(default_factory=dict)

    @property
    def label(self):
        return "Blocking" if self.blocking else "Nonblocking"

    def __str__(self):
        if self.blocking:
            return f"Blocking (trace: {self.counterexample})"
        return "Nonblocking"


def _blame(trace):
    for e in reversed(trace):
        if is_psi(e):
            return psi_index(e)
    return None


def _bfs_states(a: Automaton, targets, allowed_event=None):
    """Shortest path ``[(event_index, state), ...]`` from an initial state to ``targets``.

    Returns ``(start, steps)`` or ``None``.  Edges are tried in canonical
    event order so ties resolve deterministically.
    """
    targets = targets if isinstance(targets, (set, frozenset)) else set(targets)
    parent = {}
    queue = deque()
    for x in sorted(a.initial):
        parent[x] = None
        queue.append(x)
    out = a.out
    while queue:
        x = queue.popleft()
        if x in targets:
            steps = []
            y = x
            while parent[y] is not None:
                p, k = parent[y]
                steps.append((k, y))
                y = p
            return y, steps[::-1]
        for k, y in out[x]:
            if y in parent or (allowed_event is not None and not allowed_event(k)):
                continue
            parent[y] = (x, k)
            queue.append(y)
    return None


def blocking_states(a: Automaton, allowed_event=None):
    """Reachable (optionally only via allowed events) states that cannot reach a marked state."""
    co = a.coreachable_mask()
    if allowed_event is None:
        reach = a.reachable_mask()
    else:
        sel = np.array([allowed_event(k) for k in a.ev.tolist()], dtype=np.bool_)
        sub = Automaton.from_arrays(
            a.events, a.states, np.stack([a.src[sel], a.ev[sel], a.dst[sel]], axis=1), a.initial
        )
        reach = sub.reachable_mask()
    return set(np.flatnonzero(reach & ~co).tolist())


def check_nonblocking(a: Automaton) -> NonblockingResult:
    """Blocking iff a reachable state cannot reach a marked state; the trace is a shortest one."""
    bad = blocking_states(a)
    if not bad:
        return NonblockingResult(False, stats={"states": a.n_states})
    start, steps = _bfs_states(a, bad)
    trace = tuple(a.event_of(k) for k, _ in steps)
    end = steps[-1][1] if steps else start
    return NonblockingResult(
        True,
        Counterexample(tuple(e for e in trace if e is not TAU), a.states[end], _blame(trace)),
        stats={"states": a.n_states},
    )


# ---------------------------------------------------------------------------
# compositional


@dataclass(eq=False)
class _Node:
    uid: int
    work: Automaton  # unhidden automaton the quotient was computed from
    hidden: frozenset
    block_of: np.ndarray
    quotient: Automaton
    leaves: tuple
    children: tuple = ()  # (left, right) for products
    leaf_map: Optional[list] = None  # work state -> original leaf state (leaves only)

    @property
    def alphabet(self):
        return self.quotient.alphabet


class _Loop:
    def __init__(self, components, budget=None):
        self.components = list(components)
        self.budget = budget
        self.counter = itertools.count()
        self.active = {}
        self.owners = {}  # event -> set of active node uids
        self.stats = {"compositions": 0, "max_intermediate_states": 0, "max_abstracted_states": 0}

    # -- node construction ------------------------------------------------

    def _finish(self, work, leaves, children=(), leaf_map=None, others_alphabet=None):
        # strip behaviour after certain blocking: it cannot affect the verdict
        co = work.coreachable_mask()
        if not co.all():
            keep = co[work.src]
            work = Automaton.from_arrays(
                work.events,
                work.states,
                np.stack([work.src[keep], work.ev[keep], work.dst[keep]], axis=1),
                work.initial,
                work.marked,
                work.secret,
            )
            reach = work.reachable_mask()
            if not reach.all():
                if leaf_map is not None:
                    leaf_map = [m for m, r in zip(leaf_map, reach) if r]
                work = restrict(work, reach)
        hidden = frozenset(e for e in work.events if not is_psi(e) and e not in others_alphabet)
        h = hide(work, hidden)
        part = marking_observation_equivalence(h)
        q = remove_tau_selfloops(quotient(h, part))
        self.stats["max_intermediate_states"] = max(self.stats["max_intermediate_states"], work.n_states)
        self.stats["max_abstracted_states"] = max(self.stats["max_abstracted_states"], q.n_states)
        return _Node(next(self.counter), work, hidden, part.block_of, q, leaves, children, leaf_map)

    def _others_alphabet(self, exclude):
        return {e for e, owners in self.owners.items() if owners - exclude}

    def _add(self, node):
        self.active[node.uid] = node
        for e in node.alphabet:
            self.owners.setdefault(e, set()).add(node.uid)

    def _remove(self, node):
        del self.active[node.uid]
        for e in node.alphabet:
            s = self.owners[e]
            s.discard(node.uid)
            if not s:
                del self.owners[e]

    # -- main loop --------------------------------------------------------

    def run(self):
        comps = self.components
        alph_count = {}
        for c in comps:
            for e in c.events:
                alph_count[e] = alph_count.get(e, 0) + 1
        for i, c in enumerate(comps):
            others = {e for e in c.events if alph_count[e] > 1}
            node = self._finish(c, (i,), leaf_map=list(range(c.n_states)), others_alphabet=others)
            self._add(node)
        for node in list(self.active.values()):
            hit = self._certain_conflict(node)
            if hit is not None:
                return hit
        heap = []
        for node in self.active.values():
            self._push_pairs(heap, node)
        while len(self.active) > 1:
            a, b = self._pop(heap)
            self._remove(a)
            self._remove(b)
            work = sync_all(ModularSystem((a.quotient, b.quotient)), budget=self.budget, flat_labels=False)
            self.stats["compositions"] += 1
            others = self._others_alphabet(set())
            node = self._finish(work, a.leaves + b.leaves, (a, b), others_alphabet=others)
            self._add(node)
            hit = self._certain_conflict(node)
            if hit is not None:
                return hit
            self._push_pairs(heap, node)
        return NonblockingResult(False, stats=self.stats)

    def _score(self, a, b):
        shared = len(a.alphabet & b.alphabet)
        return a.quotient.n_states * b.quotient.n_states / (1 + shared), shared

    def _push_pairs(self, heap, node):
        seen = set()
        for e in node.alphabet:
            for uid in self.owners.get(e, ()):
                if uid != node.uid and uid not in seen:
                    seen.add(uid)
                    other = self.active[uid]
                    score, _ = self._score(node, other)
                    heapq.heappush(heap, (score, min(uid, node.uid), max(uid, node.uid)))

    def _pop(self, heap):
        while heap:
            _, u, v = heapq.heappop(heap)
            if u in self.active and v in self.active:
                return self.active[u], self.active[v]
        # nothing left shares events: take the two smallest
        nodes = sorted(self.active.values(), key=lambda n: (n.quotient.n_states, n.uid))
        return nodes[0], nodes[1]

    def _certain_conflict(self, node):
        """Blocking reachable with moves no other intermediate takes part in."""
        q = node.quotient
        others = self._others_alphabet({node.uid})
        local = [e not in others for e in q.events]

        def allowed(k):
            return k == TAU_INDEX or local[k]

        bad = blocking_states(q, None if all(local) else allowed)
        if not bad:
            return None
        start, steps = _bfs_states(q, bad, allowed)
        run_init, segments = self._expand(node, start, steps)
        trace, end = self._flatten(run_init, segments)
        trace = tuple(e for e in trace if e is not TAU)
        cex = Counterexample(trace, end, _blame(trace))
        stats = dict(self.stats)
        stats["intermediates_left"] = len(self.active)
        return NonblockingResult(True, cex, stats)

    # -- counterexample expansion -------------------------------------------

    def _concrete_segment(self, node, x, k_q, target_class):
        """Path in ``node.work`` from ``x``: silent* [event] silent* into ``target_class``."""
        w = node.work
        e = None if k_q == TAU_INDEX else node.quotient.events[k_q]
        k_e = None if e is None else w.event_index[e]
        silent = [ev in node.hidden for ev in w.events]
        need = 0 if e is None else 1
        parent = {(x, 0): None}
        queue = deque([(x, 0)])
        block_of = node.block_of
        while queue:
            y, phase = queue.popleft()
            if phase == need and block_of[y] == target_class:
                steps = []
                cur = (y, phase)
                while parent[cur] is not None:
                    prev, k = parent[cur]
                    steps.append((k, cur[0]))
                    cur = prev
                return steps[::-1], y
            for k, z in w.out[y]:
                if k == TAU_INDEX or silent[k]:
                    nxt = (z, phase)
                elif phase == 0 and k == k_e:
                    nxt = (z, 1)
                else:
                    continue
                if nxt not in parent:
                    parent[nxt] = ((y, phase), k)
                    queue.append(nxt)
        raise RuntimeError("counterexample expansion failed; abstraction is not a weak bisimulation")

    def _expand(self, node, q_start, q_steps):
        """Replay a quotient path down to leaf level.

        Returns ``(init, segments)`` with ``init`` a dict leaf -> state and one
        segment per quotient step; a segment lists ``(event, {leaf: state})``.
        """
        w = node.work
        starts = [x for x in sorted(w.initial) if node.block_of[x] == q_start]
        x = starts[0]
        x0 = x
        work_segments = []
        for k_q, target in q_steps:
            seg, x = self._concrete_segment(node, x, k_q, target)
            work_segments.append(seg)
        if not node.children:
            leaf = node.leaves[0]
            lm = node.leaf_map
            init = {leaf: lm[x0]}
            segments = [[(w.event_of(k), {leaf: lm[y]}) for k, y in seg] for seg in work_segments]
            return init, segments
        left, right = node.children
        lstart, rstart = w.states[x0]
        lsteps, rsteps = [], []
        plan = []  # per work step: which children move
        cur = w.states[x0]
        for seg in work_segments:
            for k, y in seg:
                nxt = w.states[y]
                ev = w.event_of(k)
                movers = []
                if ev is TAU:
                    if nxt[0] != cur[0]:
                        movers.append(0)
                        lsteps.append((TAU_INDEX, nxt[0]))
                    else:
                        movers.append(1)
                        rsteps.append((TAU_INDEX, nxt[1]))
                else:
                    if ev in left.quotient.alphabet:
                        movers.append(0)
                        lsteps.append((left.quotient.event_index[ev], nxt[0]))
                    if ev in right.quotient.alphabet:
                        movers.append(1)
                        rsteps.append((right.quotient.event_index[ev], nxt[1]))
                plan.append((ev, movers))
                cur = nxt
        linit, lsegs = self._expand(left, lstart, lsteps)
        rinit, rsegs = self._expand(right, rstart, rsteps)
        init = {**linit, **rinit}
        li = ri = 0
        flat = []
        for ev, movers in plan:
            if movers == [0]:
                flat.append(lsegs[li])
                li += 1
            elif movers == [1]:
                flat.append(rsegs[ri])
                ri += 1
            else:
                flat.append(_merge_joint(lsegs[li], rsegs[ri], ev))
                li += 1
                ri += 1
        segments = []
        pos = 0
        for seg in work_segments:
            merged = []
            for part in flat[pos:pos + len(seg)]:
                merged.extend(part)
            segments.append(merged)
            pos += len(seg)
        return init, segments

    def _flatten(self, init, segments):
        state = dict(init)
        for leaf in range(len(self.components)):
            if leaf not in state:
                state[leaf] = min(self.components[leaf].initial)
        trace = []
        for seg in segments:
            for ev, upd in seg:
                trace.append(ev)
                state.update(upd)
        end = tuple(self.components[i].states[state[i]] for i in range(len(self.components)))
        return tuple(trace), end


def _merge_joint(lseg, rseg, ev):
    def split(seg):
        for i, (e, _) in enumerate(seg):
            if e == ev:
                return seg[:i], seg[i][1], seg[i + 1:]
        raise RuntimeError(f"joint event {ev!r} missing from a child segment")

    lp, lu, ls = split(lseg)
    rp, ru, rs = split(rseg)
    return lp + rp + [(ev, {**lu, **ru})] + ls + rs


def check_nonblocking_compositional(components, budget=None) -> NonblockingResult:
    """Compose, hide and abstract until one intermediate is left (or a conflict is certain)."""
    components = list(components)
    if not components:
        raise ModelError("need at least one component")
    return _Loop(components, budget).run()


# ---------------------------------------------------------------------------
# over-approximation diagnosis


DEFAULT_DIAGNOSE_BUDGET = 200_000


def diagnose_overapprox(sys: ModularSystem, cex: Counterexample, k=None, budget=DEFAULT_DIAGNOSE_BUDGET):
    """Classify a two-way ψ-system counterexample.

    The trace is split into the observed past ``s`` and the future ``t``.
    If no state of the composed system is reached by ``s`` and can still
    execute ``t``, the blocking is an artefact of the modular two-way
    observers.  Otherwise the monolithic oracle decides (within ``budget``).
    """
    k = parse_k(float("inf") if k is None else k)
    trace = tuple(cex.trace)
    if not trace or not any(is_psi(e) for e in trace):
        raise ModelError("counterexample has no ψ event")
    if not all(isinstance(e, PairEvent) or is_psi(e) for e in trace):
        raise ModelError("counterexample is not over the doubled alphabet")
    cut = max(i for i, e in enumerate(trace) if is_psi(e))
    body = trace[:cut]
    past = tuple(e.label for e in body if isinstance(e, PairEvent) and e.forward)
    rev_reading = tuple(e.label for e in body if isinstance(e, PairEvent) and not e.forward)
    try:
        product = sync_all(sys, budget=budget)
        alphabet = product.alphabet
        if not set(past) <= alphabet or not set(rev_reading) <= alphabet:
            raise ModelError("counterexample uses events outside the system alphabet")
        now = weak_step(product, product.initial, past)
        able = weak_step(reverse(product), range(product.n_states), rev_reading)
        if not (now & able):
            return Diagnosis.OVER_APPROXIMATION
        verdict = oracle_kstep(product, k, budget=budget)
    except BudgetExceeded:
        return Diagnosis.UNKNOWN
    return Diagnosis.GENUINE if not verdict.opaque else Diagnosis.UNKNOWN
