"""ψ-transformation: reduce opacity of observer products to nonblocking."""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .abstraction import abstract_component
from .automaton import Automaton, ModelError, sorted_events
from .compose import ModularSystem, SecretMode
from .observers import ObserverAutomaton, TwoWayObserver, determinize, two_way_observer
from .verdict import INFINITY, PSI_PREFIX, is_psi, parse_k

DUMP = "⊥"


def psi_event(mode, i):
    """Event name for component ``i`` (0-based): one per component for OR, shared for AND."""
    return PSI_PREFIX if SecretMode.parse(mode) is SecretMode.AND else f"{PSI_PREFIX}_{i + 1}"


def psi_states_cso(d: ObserverAutomaton, secrets=None) -> set:
    secrets = d.source.secret if secrets is None else frozenset(secrets)
    return {i for i, ms in enumerate(d.members) if set(ms) <= secrets}


def psi_states_kstep(h: TwoWayObserver, secrets=None, k=INFINITY) -> set:
    k = parse_k(k)
    bad = set(h.violating(secrets))
    if k == INFINITY or not bad:
        return bad
    dist = h.reverse_counts()
    return {i for i in bad if dist[i] <= k}


def attach_psi(d: Automaton, psi_states, event) -> Automaton:
    """Add ``x -event-> ⊥`` for each ψ-state; every original state becomes marked.

    ``event`` always joins the alphabet so that a shared ψ can only fire when
    every component agrees.  ⊥ is omitted when there are no ψ-states.
    """
    if event in d.alphabet:
        raise ModelError(f"ψ event {event!r} already in the alphabet")
    if not d.is_deterministic:
        raise ModelError("attach_psi expects a deterministic automaton")
    events = sorted_events(d.events + (event,))
    pos = {e: i for i, e in enumerate(events)}
    remap = np.array([pos[e] for e in d.events] + [-1], dtype=np.int64)
    triples = [np.stack([d.src, remap[d.ev], d.dst], axis=1)] if d.src.size else []
    states = d.states
    psi_states = sorted(psi_states)
    if psi_states:
        bottom = d.n_states
        states = states + (DUMP,)
        triples.append(np.array([(x, pos[event], bottom) for x in psi_states], dtype=np.int64))
    arr = np.concatenate(triples) if triples else np.empty((0, 3), np.int64)
    return Automaton.from_arrays(
        events, states, arr, d.initial, range(d.n_states), d.secret, name=d.name
    )


@dataclass
class PsiSystem:
    components: list
    observers: list
    abstracted: list
    events: list
    kind: str
    k: object
    mode: SecretMode
    psi_states: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)


def check_reserved(sys: ModularSystem):
    for i, c in enumerate(sys.components):
        bad = [e for e in c.events if is_psi(e)]
        if bad:
            raise ModelError(f"component {i} ({c.name or 'unnamed'}) uses reserved event label {bad[0]!r}")


def _threads():
    try:
        return max(1, int(os.environ.get("OPAQ_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    n = _threads()
    if n <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def build_psi_system(sys: ModularSystem, kind="cso", k=INFINITY, abstract=True) -> PsiSystem:
    """Abstract each component, build its observer, and attach ψ.

    ``kind`` is ``"cso"`` (current-state estimators) or ``"kstep"`` (two-way
    observers; ``k`` may be infinite).
    """
    if kind not in ("cso", "kstep"):
        raise ModelError(f"unknown property {kind!r}")
    check_reserved(sys)
    k = parse_k(k)
    timings = {}
    t0 = time.perf_counter()
    comps = list(sys.components)
    abstracted = _map(abstract_component, comps) if abstract else comps
    timings["ooe"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if kind == "cso":
        observers = _map(determinize, abstracted)
        bad = [psi_states_cso(d) for d in observers]
    else:
        observers = _map(two_way_observer, abstracted)
        bad = [psi_states_kstep(h, None, k) for h in observers]
    timings["cse"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    events = [psi_event(sys.mode, i) for i in range(len(comps))]
    psi = [attach_psi(o.automaton, b, e) for o, b, e in zip(observers, bad, events)]
    timings["psi"] = time.perf_counter() - t0
    return PsiSystem(psi, observers, abstracted, events, kind, k, sys.mode, bad, timings)
