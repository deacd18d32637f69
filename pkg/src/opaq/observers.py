"""Current-state estimators, two-way observers and the monolithic opacity oracles."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .automaton import (
    Automaton,
    PairEvent,
    rename_forward,
    rename_reverse,
    reverse,
    ur as _ur,
)
from .compose import BudgetExceeded, ModularSystem, sync_all
from .verdict import INFINITY, Counterexample, Status, Verdict, parse_k


def ur(a: Automaton, states) -> frozenset:
    """Unobservably reached states from ``states``."""
    return _ur(a, states)


@dataclass(frozen=True, eq=False)
class ObserverAutomaton:
    """Deterministic estimator; ``members[i]`` are the source state ids of state ``i``."""

    automaton: Automaton
    members: tuple
    source: Automaton

    def member_labels(self, i):
        return frozenset(self.source.states[m] for m in self.members[i])

    def state_sets(self):
        return [self.member_labels(i) for i in range(self.automaton.n_states)]

    def find(self, labels):
        """Index of the state whose member set has exactly these labels."""
        target = frozenset(labels)
        for i in range(self.automaton.n_states):
            if self.member_labels(i) == target:
                return i
        raise KeyError(target)


def determinize(a: Automaton, budget=None) -> ObserverAutomaton:
    """Subset construction with τ-closure; only reachable subsets are built.

    An observer state is flagged secret iff all its members are secret and
    marked iff some member is marked.
    """
    closure = a.tau_closure
    delta = a.delta
    start = frozenset(_ur(a, a.initial))
    index = {start: 0}
    order = [start]
    triples = []
    head = 0
    n_ev = len(a.events)
    while head < len(order):
        x = order[head]
        i = head
        head += 1
        nxt = [set() for _ in range(n_ev)]
        for q in x:
            for k, ys in delta[q].items():
                if k >= 0:
                    nxt[k].update(ys)
        for k in range(n_ev):
            if not nxt[k]:
                continue
            y = set()
            for q in nxt[k]:
                y |= closure[q]
            y = frozenset(y)
            j = index.get(y)
            if j is None:
                j = len(order)
                index[y] = j
                order.append(y)
                if budget is not None and len(order) > budget:
                    raise BudgetExceeded(f"observer exceeded {budget} states")
            triples.append((i, k, j))
    members = tuple(tuple(sorted(x)) for x in order)
    labels = tuple(tuple(a.states[m] for m in ms) for ms in members)
    secret = {i for i, ms in enumerate(members) if set(ms) <= a.secret}
    marked = {i for i, ms in enumerate(members) if a.marked.intersection(ms)}
    det = Automaton.from_arrays(
        a.events, labels, np.array(triples, np.int64).reshape(-1, 3), {0}, marked, secret, name=a.name
    )
    return ObserverAutomaton(det, members, a)


@dataclass(frozen=True, eq=False)
class TwoWayObserver:
    """``H = Δ(det G) ∥ Δ_R(det G_R)``; state ``i`` pairs ``forward[i]`` with ``backward[i]``."""

    automaton: Automaton
    forward: tuple
    backward: tuple
    source: Automaton

    def pair_labels(self, i):
        src = self.source.states
        return (
            frozenset(src[m] for m in self.forward[i]),
            frozenset(src[m] for m in self.backward[i]),
        )

    def state_pairs(self):
        return [self.pair_labels(i) for i in range(self.automaton.n_states)]

    def intersection(self, i):
        return frozenset(self.forward[i]).intersection(self.backward[i])

    def find(self, fwd_labels, bwd_labels):
        target = (frozenset(fwd_labels), frozenset(bwd_labels))
        for i in range(self.automaton.n_states):
            if self.pair_labels(i) == target:
                return i
        raise KeyError(target)

    def reverse_counts(self):
        """Minimal number of ``(ε,σ)`` events on a path from the initial state."""
        h = self.automaton
        indptr, indices, order = _kernels.build_csr(h.n_states, h.src, h.dst)
        is_rev = np.array([not e.forward for e in h.events] + [False], dtype=np.int64)
        weights = is_rev[h.ev[order]]
        return _kernels.zero_one_dist(indptr, indices, weights, h.initial_mask())

    def violating(self, secret=None):
        """States whose estimate intersection is non-empty and entirely secret."""
        secret = self.source.secret if secret is None else frozenset(secret)
        out = []
        for i in range(self.automaton.n_states):
            inter = self.intersection(i)
            if inter and inter <= secret:
                out.append(i)
        return out


def two_way_observer(a: Automaton, budget=None) -> TwoWayObserver:
    fwd = determinize(a, budget)
    bwd = determinize(reverse(a), budget)
    h = sync_all(
        ModularSystem((rename_forward(fwd.automaton), rename_reverse(bwd.automaton))),
        budget=budget,
        flat_labels=False,
    )
    pairs = h.states
    forward = tuple(fwd.members[i] for i, _ in pairs)
    backward = tuple(bwd.members[j] for _, j in pairs)
    labels = tuple((fwd.automaton.states[i], bwd.automaton.states[j]) for i, j in pairs)
    h = h.replace(states=labels, secret=(), marked=(), name=a.name)
    return TwoWayObserver(h, forward, backward, a)


# ---------------------------------------------------------------------------
# shortest witnesses


def bfs_path(a: Automaton, targets, allowed=None):
    """Shortest event path from an initial state to a state in ``targets``.

    Edges are explored in canonical event order so the path is also the
    lexicographically least among shortest ones.  ``allowed(x, k, y)`` can
    filter edges.  Returns ``(trace, end_state)`` or ``None``.
    """
    targets = set(targets)
    parent = {}
    queue = deque()
    for x in sorted(a.initial):
        parent[x] = None
        queue.append(x)
    while queue:
        x = queue.popleft()
        if x in targets:
            path = []
            y = x
            while parent[y] is not None:
                p, k = parent[y]
                path.append(a.event_of(k))
                y = p
            return tuple(reversed(path)), x
        for k, y in a.out[x]:
            if y in parent or (allowed is not None and not allowed(x, k, y)):
                continue
            parent[y] = (x, k)
            queue.append(y)
    return None


# ---------------------------------------------------------------------------
# monolithic oracles


def oracle_cso(a: Automaton, budget=None) -> Verdict:
    """Current-state opacity: no reachable estimate is a subset of the secret states."""
    d = determinize(a, budget)
    bad = [i for i, ms in enumerate(d.members) if set(ms) <= a.secret]
    if not bad:
        return Verdict(Status.OPAQUE, stats={"observer_states": d.automaton.n_states})
    trace, end = bfs_path(d.automaton, bad)
    return Verdict(
        Status.NOT_OPAQUE,
        Counterexample(trace, d.member_labels(end)),
        stats={"observer_states": d.automaton.n_states},
    )


def oracle_kstep(a: Automaton, k, budget=None) -> Verdict:
    """K-step opacity via the two-way observer and minimal reverse-event counts."""
    k = parse_k(k)
    h = two_way_observer(a, budget)
    bad = set(h.violating())
    stats = {"two_way_states": h.automaton.n_states}
    if k != INFINITY and bad:
        dist = h.reverse_counts()
        bad = {i for i in bad if dist[i] <= k}
    else:
        dist = None
    if not bad:
        return Verdict(Status.OPAQUE, stats=stats)
    ha = h.automaton
    allowed = None
    if dist is not None:
        rev = [not e.forward for e in ha.events]

        def allowed(x, kk, y):
            return dist[y] == dist[x] + (1 if rev[kk] else 0)

    trace, end = bfs_path(ha, bad, allowed)
    return Verdict(Status.NOT_OPAQUE, Counterexample(trace, h.pair_labels(end)), stats=stats)


def oracle_infinite(a: Automaton, budget=None) -> Verdict:
    return oracle_kstep(a, INFINITY, budget)


def format_set(labels):
    return "{" + ",".join(sorted(map(str, labels))) + "}"
