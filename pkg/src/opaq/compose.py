"""Synchronous composition with OR/AND secret semantics."""

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .automaton import TAU, TAU_INDEX, Automaton, ModelError, sorted_events


class SecretMode(enum.Enum):
    OR = "or"
    AND = "and"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ModelError(f"unknown secret mode {value!r} (expected 'or' or 'and')") from None

    def combine(self, flags):
        return any(flags) if self is SecretMode.OR else all(flags)


class BudgetExceeded(RuntimeError):
    """A state-count budget was exhausted during an explicit construction."""


@dataclass(frozen=True)
class ModularSystem:
    components: tuple
    mode: SecretMode = SecretMode.OR

    def __init__(self, components: Iterable[Automaton], mode=SecretMode.OR):
        object.__setattr__(self, "components", tuple(components))
        object.__setattr__(self, "mode", SecretMode.parse(mode))

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def alphabet(self):
        out = set()
        for c in self.components:
            out |= c.alphabet
        return frozenset(out)

    def with_components(self, components):
        return ModularSystem(components, self.mode)


def sync(a: Automaton, b: Automaton, mode=SecretMode.OR, budget=None) -> Automaton:
    """Reachable part of ``a ∥ b``; state labels are ``(label_a, label_b)``."""
    return sync_all(ModularSystem((a, b), mode), budget=budget)


def sync_all(sys: ModularSystem, budget=None, flat_labels=True) -> Automaton:
    """Reachable n-ary product with secrecy evaluated on the whole tuple.

    With ``flat_labels`` a state is labelled by the tuple of component labels;
    a singleton system returns the component unchanged.
    """
    comps = sys.components
    if not comps:
        raise ModelError("cannot compose an empty system")
    if len(comps) == 1:
        return comps[0]
    events = sorted_events(set().union(*(c.alphabet for c in comps)))
    # per component: global event index -> local index, or None if not in alphabet
    local = []
    for c in comps:
        idx = c.event_index
        local.append([idx.get(e) for e in events])
    gindex = {e: k for k, e in enumerate(events)}
    globals_of = [[gindex[e] for e in c.events] for c in comps]
    owners = [[i for i in range(len(comps)) if local[i][k] is not None] for k in range(len(events))]
    deltas = [c.delta for c in comps]
    secret = [c.secret for c in comps]
    marked = [c.marked for c in comps]
    mode = sys.mode

    init = _initial_tuples(comps)
    index = {}
    order = []
    for t in init:
        if t not in index:
            index[t] = len(order)
            order.append(t)
    triples = []
    head = 0
    while head < len(order):
        t = order[head]
        sid = head
        head += 1
        succ = []
        # τ moves of single components
        for i, x in enumerate(t):
            for y in deltas[i][x].get(TAU_INDEX, ()):
                succ.append((TAU_INDEX, t[:i] + (y,) + t[i + 1:]))
        # candidate observable events: those enabled in some participating component
        cand = set()
        for i, x in enumerate(t):
            to_global = globals_of[i]
            cand.update(to_global[k] for k in deltas[i][x] if k != TAU_INDEX)
        for g in sorted(cand):
            parts = owners[g]
            options = []
            for i in parts:
                ys = deltas[i][t[i]].get(local[i][g], ())
                if not ys:
                    break
                options.append(ys)
            else:
                for combo in _product(options):
                    nt = list(t)
                    for i, y in zip(parts, combo):
                        nt[i] = y
                    succ.append((g, tuple(nt)))
        for g, nt in succ:
            j = index.get(nt)
            if j is None:
                j = len(order)
                index[nt] = j
                order.append(nt)
                if budget is not None and len(order) > budget:
                    raise BudgetExceeded(f"product exceeded {budget} states")
            triples.append((sid, g, j))

    labels = (
        tuple(tuple(c.states[x] for c, x in zip(comps, t)) for t in order)
        if flat_labels
        else tuple(order)
    )
    sec = {i for i, t in enumerate(order) if mode.combine([x in s for x, s in zip(t, secret)])}
    mk = {i for i, t in enumerate(order) if all(x in m for x, m in zip(t, marked))}
    return Automaton.from_arrays(
        events,
        labels,
        np.array(triples, dtype=np.int64).reshape(-1, 3),
        {index[t] for t in init},
        mk,
        sec,
        name="∥".join(c.name for c in comps if c.name),
    )


def _initial_tuples(comps):
    tuples = [()]
    for c in comps:
        tuples = [t + (x,) for t in tuples for x in sorted(c.initial)]
    return tuples


def _product(options):
    if len(options) == 1:
        return [(y,) for y in options[0]]
    out = [()]
    for ys in options:
        out = [o + (y,) for o in out for y in ys]
    return out


def project_event(sigma, target_alphabet):
    """``sigma`` if it belongs to ``target_alphabet``, else ``None``."""
    return sigma if sigma in target_alphabet else None


def project_trace(trace: Sequence, target_alphabet) -> tuple:
    return tuple(e for e in trace if e is not TAU and e in target_alphabet)
