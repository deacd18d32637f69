"""Observation-equivalence abstractions.

Both equivalences are weak bisimulations computed by signature refinement on
the τ-saturated transition relation; they only differ in the flag the
blocks must agree on (secret for opacity, marked for nonblocking).
"""

import numpy as np

from .automaton import (
    TAU_INDEX,
    Automaton,
    Partition,
    accessible,
    quotient,
    remove_tau_selfloops,
)


def saturate(a: Automaton):
    """``sat[x]`` = sorted tuple of ``(k, y)`` with ``x ⇒ᵏ y``; ``k = -1`` is the empty word."""
    closure = a.tau_closure
    delta = a.delta
    sat = []
    for x in range(a.n_states):
        cx = closure[x]
        pairs = {(TAU_INDEX, y) for y in cx}
        targets = {}
        for c in cx:
            for k, ys in delta[c].items():
                if k != TAU_INDEX:
                    targets.setdefault(k, set()).update(ys)
        for k, ys in targets.items():
            for y in ys:
                for z in closure[y]:
                    pairs.add((k, z))
        sat.append(tuple(sorted(pairs)))
    return sat


def weak_bisimulation(a: Automaton, labels) -> Partition:
    """Coarsest weak bisimulation refining the partition induced by ``labels``."""
    n = a.n_states
    if n == 0:
        return Partition([], 0)
    block = _renumber(list(labels))
    count = len(set(block))
    if not a.n_transitions:
        return Partition.from_labels(block)
    sat = saturate(a)
    while True:
        sigs = [
            (block[x], frozenset((k, block[y]) for k, y in sat[x]))
            for x in range(n)
        ]
        new = _renumber(sigs)
        new_count = max(new) + 1
        block = new
        if new_count == count:
            break
        count = new_count
    return Partition.from_labels(block)


def _renumber(keys):
    ids = {}
    return [ids.setdefault(k, len(ids)) for k in keys]


def opaque_observation_equivalence(a: Automaton, respect_marking=True) -> Partition:
    """Coarsest secret-uniform weak bisimulation.

    By default blocks are also marking-uniform.  That is still an opaque
    observation equivalence (any finer bisimulation is), and it keeps
    marked terminal states apart from unmarked ones.
    """
    if respect_marking:
        labels = [(x in a.secret, x in a.marked) for x in range(a.n_states)]
    else:
        labels = [x in a.secret for x in range(a.n_states)]
    return weak_bisimulation(a, labels)


def marking_observation_equivalence(a: Automaton) -> Partition:
    """Coarsest marking-uniform weak bisimulation."""
    return weak_bisimulation(a, [x in a.marked for x in range(a.n_states)])


def abstract_component(a: Automaton, keep_unreachable=False, respect_marking=True) -> Automaton:
    """Quotient of the accessible part by opaque observation equivalence, τ self-loops dropped."""
    return abstract_with_partition(a, keep_unreachable, respect_marking)[2]


def abstract_with_partition(a: Automaton, keep_unreachable=False, respect_marking=True):
    """Like :func:`abstract_component` but also returns the base automaton and partition."""
    if not keep_unreachable:
        a = accessible(a)
    part = opaque_observation_equivalence(a, respect_marking)
    return a, part, remove_tau_selfloops(quotient(a, part))


def block_map(a: Automaton, part: Partition, q: Automaton):
    """``{quotient state label: [member labels]}`` for reports."""
    return {
        _jsonable(q.states[i]): [_jsonable(a.states[m]) for m in blk]
        for i, blk in enumerate(part.blocks)
    }


def _jsonable(label):
    return label if isinstance(label, (str, int)) else str(label)


def is_secret_uniform(a: Automaton, part: Partition) -> bool:
    flags = np.array([x in a.secret for x in range(a.n_states)])
    return all(len(set(flags[list(b)])) == 1 for b in part.blocks)
