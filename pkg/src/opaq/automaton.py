"""Nondeterministic automata with an unobservable event, secret and marked states.

States are dense integers ``0..n-1``; ``Automaton.states`` holds a label
(name or provenance record) per state.  Transitions are stored as three
parallel int arrays; an event index of ``-1`` is the unobservable event τ.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels


class ModelError(ValueError):
    """Malformed model or invalid operation input."""


class _Tau:
    __slots__ = ()

    def __repr__(self):
        return "τ"

    __str__ = __repr__

    def __reduce__(self):
        return (_tau, ())


def _tau():
    return TAU


TAU = _Tau()
TAU_INDEX = -1


class PairEvent(NamedTuple):
    """Event of a renamed automaton: ``(σ, ε)`` if ``forward`` else ``(ε, σ)``."""

    label: Hashable
    forward: bool

    def __str__(self):
        return f"({self.label},ε)" if self.forward else f"(ε,{self.label})"

    __repr__ = __str__


def event_key(e):
    """Canonical sort key; pair events sort by label then forward-first."""
    if isinstance(e, PairEvent):
        return (str(e.label), 1 if e.forward else 2)
    return (str(e), 0)


def sorted_events(events):
    return tuple(sorted(set(events), key=event_key))


@dataclass(frozen=True, eq=False)
class Automaton:
    events: tuple
    states: tuple
    src: np.ndarray
    ev: np.ndarray
    dst: np.ndarray
    initial: frozenset
    marked: frozenset = frozenset()
    secret: frozenset = frozenset()
    name: str = ""

    # -- construction -----------------------------------------------------

    @classmethod
    def build(cls, events, states, transitions, initial, marked=(), secret=(), name=""):
        """Build from labels.

        ``transitions`` are ``(src_label, event, dst_label)`` triples where
        ``event`` is an alphabet member or :data:`TAU`.
        """
        states = tuple(states)
        index = {}
        for i, s in enumerate(states):
            if s in index:
                raise ModelError(f"duplicate state {s!r}")
            index[s] = i
        events = sorted_events(events)
        if TAU in events:
            raise ModelError("τ may not be declared in the alphabet")
        ev_index = {e: i for i, e in enumerate(events)}

        def sid(label, what):
            try:
                return index[label]
            except KeyError:
                raise ModelError(f"{what} refers to unknown state {label!r}") from None

        triples = []
        for x, e, y in transitions:
            if e is TAU:
                k = TAU_INDEX
            else:
                try:
                    k = ev_index[e]
                except KeyError:
                    raise ModelError(f"transition uses undeclared event {e!r}") from None
            triples.append((sid(x, "transition"), k, sid(y, "transition")))
        return cls.from_arrays(
            events,
            states,
            triples,
            {sid(s, "initial") for s in initial},
            {sid(s, "marked") for s in marked},
            {sid(s, "secret") for s in secret},
            name=name,
        )

    @classmethod
    def from_arrays(cls, events, states, triples, initial, marked=(), secret=(), name=""):
        """Build from integer triples ``(src, event_index, dst)``; ``events`` must be canonical."""
        if isinstance(triples, np.ndarray):
            arr = triples.astype(np.int64).reshape(-1, 3)
        else:
            arr = np.array(list(triples), dtype=np.int64).reshape(-1, 3)
        if arr.size:
            arr = np.unique(arr, axis=0)
        initial = frozenset(int(i) for i in initial)
        if not initial:
            raise ModelError("automaton needs at least one initial state")
        n = len(states)
        if arr.size and (arr[:, [0, 2]].min() < 0 or arr[:, [0, 2]].max() >= n):
            raise ModelError("transition refers to a state out of range")
        return cls(
            events=tuple(events),
            states=tuple(states),
            src=arr[:, 0].copy(),
            ev=arr[:, 1].copy(),
            dst=arr[:, 2].copy(),
            initial=initial,
            marked=frozenset(int(i) for i in marked),
            secret=frozenset(int(i) for i in secret),
            name=name,
        )

    def replace(self, **changes):
        fields = dict(
            events=self.events,
            states=self.states,
            triples=self.triples(),
            initial=self.initial,
            marked=self.marked,
            secret=self.secret,
            name=self.name,
        )
        fields.update(changes)
        return Automaton.from_arrays(**fields)

    # -- basic queries ----------------------------------------------------

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_transitions(self):
        return int(self.src.size)

    @cached_property
    def event_index(self):
        return {e: i for i, e in enumerate(self.events)}

    @cached_property
    def state_index(self):
        return {s: i for i, s in enumerate(self.states)}

    @property
    def alphabet(self):
        return frozenset(self.events)

    def event_of(self, k):
        return TAU if k == TAU_INDEX else self.events[k]

    def triples(self):
        return np.stack([self.src, self.ev, self.dst], axis=1) if self.src.size else np.empty((0, 3), np.int64)

    def transitions(self):
        """Labelled transitions ``(src_label, event, dst_label)`` in canonical order."""
        return [
            (self.states[x], self.event_of(k), self.states[y])
            for x, k, y in zip(self.src.tolist(), self.ev.tolist(), self.dst.tolist())
        ]

    @cached_property
    def has_tau(self):
        return bool((self.ev == TAU_INDEX).any())

    @cached_property
    def is_deterministic(self):
        if len(self.initial) != 1 or self.has_tau:
            return False
        pairs = self.src * (len(self.events) + 1) + self.ev
        return np.unique(pairs).size == pairs.size

    @cached_property
    def out(self):
        """``out[x]`` lists ``(event_index, dst)`` sorted by event order then dst."""
        adj = [[] for _ in range(self.n_states)]
        for x, k, y in zip(self.src.tolist(), self.ev.tolist(), self.dst.tolist()):
            adj[x].append((k, y))
        return [tuple(a) for a in adj]

    @cached_property
    def delta(self):
        """``delta[x][k]`` = tuple of successors of ``x`` under event index ``k``."""
        table = [dict() for _ in range(self.n_states)]
        for x, k, y in zip(self.src.tolist(), self.ev.tolist(), self.dst.tolist()):
            table[x].setdefault(k, []).append(y)
        return [{k: tuple(v) for k, v in d.items()} for d in table]

    def initial_mask(self):
        m = np.zeros(self.n_states, np.bool_)
        m[list(self.initial)] = True
        return m

    def mask(self, ids):
        m = np.zeros(self.n_states, np.bool_)
        if ids:
            m[list(ids)] = True
        return m

    # -- CSR views used by the kernels ------------------------------------

    @cached_property
    def csr(self):
        return _kernels.build_csr(self.n_states, self.src, self.dst)[:2]

    @cached_property
    def csr_reverse(self):
        return _kernels.build_csr(self.n_states, self.dst, self.src)[:2]

    @cached_property
    def tau_csr(self):
        sel = self.ev == TAU_INDEX
        return _kernels.build_csr(self.n_states, self.src[sel], self.dst[sel])[:2]

    @cached_property
    def tau_closure(self):
        """``tau_closure[x]`` = frozenset of states reachable from ``x`` by τ*."""
        if not self.has_tau:
            return tuple(frozenset((x,)) for x in range(self.n_states))
        ptr, idx = _kernels.closure(*self.tau_csr, self.n_states)
        idx = idx.tolist()
        return tuple(frozenset(idx[ptr[x]:ptr[x + 1]]) for x in range(self.n_states))

    def reachable_mask(self):
        return _kernels.reach_mask(*self.csr, self.initial_mask())

    def coreachable_mask(self, targets=None):
        targets = self.marked if targets is None else targets
        return _kernels.reach_mask(*self.csr_reverse, self.mask(targets))

    def summary(self):
        return (
            f"{self.n_states} states, {self.n_transitions} transitions, "
            f"{len(self.secret)} secret"
        )

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Automaton{label}: {self.summary()}, {len(self.events)} events>"


Trace = Sequence[Hashable]


# ---------------------------------------------------------------------------
# τ-semantics


def ur(a: Automaton, states: Iterable[int]) -> frozenset:
    """Unobservable reach: τ-closure of ``states``."""
    closure = a.tau_closure
    out = set()
    for x in states:
        out |= closure[x]
    return frozenset(out)


def step(a: Automaton, states: Iterable[int], event) -> frozenset:
    """Single observable step followed by τ-closure (no leading closure)."""
    try:
        k = a.event_index[event]
    except KeyError:
        raise ModelError(f"event {event!r} not in alphabet") from None
    delta = a.delta
    nxt = set()
    for x in states:
        nxt.update(delta[x].get(k, ()))
    return ur(a, nxt)


def weak_step(a: Automaton, sources: Iterable[int], trace: Trace) -> frozenset:
    """States ``q`` with ``p ⇒ˢ q`` for some ``p`` in ``sources``."""
    current = ur(a, sources)
    for e in trace:
        if e is TAU:
            raise ModelError("weak_step expects an observable trace")
        current = step(a, current, e)
        if not current:
            break
    return current


def project(trace: Trace) -> tuple:
    """Erase τ from a trace."""
    return tuple(e for e in trace if e is not TAU)


def accepts(a: Automaton, trace: Trace) -> bool:
    return bool(weak_step(a, a.initial, trace))


# ---------------------------------------------------------------------------
# structural operations


def accessible(a: Automaton) -> Automaton:
    """Restrict to states reachable from the initial states."""
    keep = a.reachable_mask()
    if keep.all():
        return a
    return restrict(a, keep)


def restrict(a: Automaton, keep) -> Automaton:
    """Sub-automaton on ``keep`` (a boolean mask or an iterable of state ids)."""
    if not (isinstance(keep, np.ndarray) and keep.dtype == np.bool_):
        keep = a.mask(set(keep))
    new_id = np.full(a.n_states, -1, np.int64)
    new_id[keep] = np.arange(int(keep.sum()))
    sel = keep[a.src] & keep[a.dst]
    triples = np.stack([new_id[a.src[sel]], a.ev[sel], new_id[a.dst[sel]]], axis=1)

    def remap(ids):
        return {int(new_id[i]) for i in ids if keep[i]}

    return Automaton.from_arrays(
        a.events,
        tuple(s for s, k in zip(a.states, keep) if k),
        triples,
        remap(a.initial),
        remap(a.marked),
        remap(a.secret),
        name=a.name,
    )


def _rename(a: Automaton, forward: bool) -> Automaton:
    events = tuple(PairEvent(e, forward) for e in a.events)
    # the map preserves relative order, so indices stay valid
    return Automaton.from_arrays(
        sorted_events(events),
        a.states,
        _remap_events(a, events),
        a.initial,
        a.marked,
        a.secret,
        name=a.name,
    )


def _remap_events(a, new_events):
    canon = sorted_events(new_events)
    pos = {e: i for i, e in enumerate(canon)}
    lookup = np.array([pos[e] for e in new_events] + [TAU_INDEX], dtype=np.int64)
    return np.stack([a.src, lookup[a.ev], a.dst], axis=1) if a.src.size else np.empty((0, 3), np.int64)


def rename_forward(a: Automaton) -> Automaton:
    """Relabel every event σ as ``(σ, ε)``."""
    return _rename(a, True)


def rename_reverse(a: Automaton) -> Automaton:
    """Relabel every event σ as ``(ε, σ)``."""
    return _rename(a, False)


def reverse(a: Automaton) -> Automaton:
    """Flip every transition; all states become initial."""
    triples = np.stack([a.dst, a.ev, a.src], axis=1) if a.src.size else np.empty((0, 3), np.int64)
    return Automaton.from_arrays(
        a.events, a.states, triples, range(a.n_states), a.marked, a.secret, name=a.name
    )


def hide(a: Automaton, events: Iterable) -> Automaton:
    """Replace the given events by τ and drop them from the alphabet."""
    hidden = set(events) & set(a.events)
    if not hidden:
        return a
    kept = tuple(e for e in a.events if e not in hidden)
    pos = {e: i for i, e in enumerate(kept)}
    lookup = np.array(
        [TAU_INDEX if e in hidden else pos[e] for e in a.events] + [TAU_INDEX], dtype=np.int64
    )
    triples = np.stack([a.src, lookup[a.ev], a.dst], axis=1)
    return Automaton.from_arrays(kept, a.states, triples, a.initial, a.marked, a.secret, name=a.name)


def remove_tau_selfloops(a: Automaton) -> Automaton:
    sel = ~((a.ev == TAU_INDEX) & (a.src == a.dst))
    if sel.all():
        return a
    triples = np.stack([a.src[sel], a.ev[sel], a.dst[sel]], axis=1)
    return Automaton.from_arrays(a.events, a.states, triples, a.initial, a.marked, a.secret, name=a.name)


class Partition:
    """Partition of ``range(n)`` into blocks; ``block_of[x]`` is the block id of ``x``.

    Blocks are numbered by their smallest member so equal partitions compare equal.
    """

    def __init__(self, blocks, n=None):
        blocks = [sorted(int(x) for x in b) for b in blocks if len(b)]
        blocks.sort(key=lambda b: b[0])
        size = sum(len(b) for b in blocks)
        n = size if n is None else n
        block_of = np.full(n, -1, np.int64)
        for i, b in enumerate(blocks):
            if block_of[b].max(initial=-1) >= 0:
                raise ModelError("partition blocks overlap")
            block_of[b] = i
        if size != n or (n and block_of.min() < 0):
            raise ModelError("partition does not cover all states")
        self.blocks = tuple(tuple(b) for b in blocks)
        self.block_of = block_of

    @classmethod
    def from_labels(cls, labels):
        """Group states by an arbitrary hashable label per state."""
        groups = {}
        for x, lab in enumerate(labels):
            groups.setdefault(lab, []).append(x)
        return cls(groups.values(), len(labels))

    @classmethod
    def identity(cls, n):
        return cls([[x] for x in range(n)], n)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __eq__(self, other):
        return isinstance(other, Partition) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        return f"Partition({[list(b) for b in self.blocks]})"


def class_label(a: Automaton, members) -> Hashable:
    """Label for a quotient state: the member label itself, or ``[first]`` for merged classes."""
    first = a.states[members[0]]
    if len(members) == 1:
        return first
    if isinstance(first, str):
        return f"[{first}]"
    return ("class",) + tuple(a.states[m] for m in members)


def quotient(a: Automaton, classes: Partition) -> Automaton:
    """Quotient automaton; a class is secret (marked) iff some member is."""
    if len(classes.block_of) != a.n_states:
        raise ModelError("partition does not cover the automaton's states")
    b = classes.block_of
    triples = np.stack([b[a.src], a.ev, b[a.dst]], axis=1) if a.src.size else np.empty((0, 3), np.int64)
    return Automaton.from_arrays(
        a.events,
        tuple(class_label(a, blk) for blk in classes.blocks),
        triples,
        {int(b[x]) for x in a.initial},
        {int(b[x]) for x in a.marked},
        {int(b[x]) for x in a.secret},
        name=a.name,
    )
