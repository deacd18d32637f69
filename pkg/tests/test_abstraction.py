from _support import (
    INF,
    brute_blocking,
    brute_cso,
    brute_kstep,
    canonical,
    make_rng,
    random_automaton,
    random_deterministic,
)
from opaq.abstraction import (
    abstract_component,
    abstract_with_partition,
    block_map,
    is_secret_uniform,
    marking_observation_equivalence,
    opaque_observation_equivalence,
)
from opaq.automaton import TAU, Automaton, quotient
from opaq.compose import ModularSystem, SecretMode
from opaq.fixtures import g1, g2
from opaq.psi import attach_psi
from opaq.observers import determinize


def naive_weak_bisim(a, label):
    """Greatest fixed point over state pairs using weak transitions computed from scratch."""
    n = a.n_states
    trans = [(a.state_index[x], e, a.state_index[y]) for x, e, y in a.transitions()]

    def tau_close(xs):
        seen = set(xs)
        changed = True
        while changed:
            changed = False
            for x, e, y in trans:
                if e is TAU and x in seen and y not in seen:
                    seen.add(y)
                    changed = True
        return seen

    def weak(x, e):
        start = tau_close({x})
        if e is TAU:
            return start
        mid = {y for s, ev, y in trans if s in start and ev == e}
        return tau_close(mid)

    moves = (TAU,) + tuple(a.events)
    wk = {(x, e): weak(x, e) for x in range(n) for e in moves}
    rel = {(x, y) for x in range(n) for y in range(n) if label(x) == label(y)}
    changed = True
    while changed:
        changed = False
        for x, y in list(rel):
            ok = True
            for e in moves:
                for x2 in wk[(x, e)]:
                    if not any((x2, y2) in rel for y2 in wk[(y, e)]):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                rel.discard((x, y))
                rel.discard((y, x))
                changed = True
    return {frozenset(y for y in range(n) if (x, y) in rel) for x in range(n)}


def test_ooe_g1_blocks():
    a = g1()
    part = opaque_observation_equivalence(a)
    named = {frozenset(a.states[i] for i in b) for b in part.blocks}
    assert named == {
        frozenset({"s0"}),
        frozenset({"s1", "s3"}),
        frozenset({"s2", "s4"}),
        frozenset({"s5"}),
    }


def test_ooe_all_secret_no_transitions_single_block():
    a = Automaton.build(["a"], ["x", "y", "z"], [], ["x"], secret=["x", "y", "z"])
    assert len(opaque_observation_equivalence(a)) == 1


def test_ooe_matches_naive_fixed_point():
    for seed in range(150):
        a = random_automaton(make_rng(seed), max_states=6)
        for respect in (True, False):
            part = opaque_observation_equivalence(a, respect_marking=respect)
            if respect:
                label = lambda x: (x in a.secret, x in a.marked)  # noqa: E731
            else:
                label = lambda x: x in a.secret  # noqa: E731
            assert {frozenset(b) for b in part.blocks} == naive_weak_bisim(a, label), seed
            assert is_secret_uniform(a, part)


def test_abstract_g1_gives_four_states():
    q = abstract_component(g1())
    assert q.n_states == 4
    assert set(q.transitions()) == {("s0", "α", "[s1]"), ("s0", "α", "[s2]"), ("[s1]", "β", "s5")}


def test_block_map_report():
    base, part, q = abstract_with_partition(g1())
    assert block_map(base, part, q)["[s1]"] == ["s1", "s3"]


def test_minimal_deterministic_unchanged():
    a = Automaton.build(
        ["a"], ["x", "y", "z"], [("x", "a", "y"), ("y", "a", "z")], ["x"], secret=["y"], marked=["z"]
    )
    assert canonical(abstract_component(a)) == canonical(a)


def test_cso_preserved_on_examples():
    for mode in SecretMode:
        orig = ModularSystem([g1(("s1", "s2", "s3", "s4")), g2(("t1",))], mode)
        red = ModularSystem([abstract_component(c) for c in orig.components], mode)
        assert brute_cso(orig)[0] == brute_cso(red)[0]


def test_opacity_preserved_random():
    for seed in range(120):
        rng = make_rng(1000 + seed)
        a = random_automaton(rng, max_states=6)
        q = abstract_component(a)
        assert brute_cso(ModularSystem([a]))[0] == brute_cso(ModularSystem([q]))[0], seed
        for k in (1, INF):
            assert brute_kstep(ModularSystem([a]), k) == brute_kstep(ModularSystem([q]), k), (seed, k)


def test_marking_oe_psi_dump_isolated():
    d = determinize(g2(("t1",))).automaton
    p = attach_psi(d, {1}, "__psi_1")
    part = marking_observation_equivalence(p)
    dump = p.state_index["⊥"]
    assert frozenset({dump}) in {frozenset(b) for b in part.blocks}


def test_marking_oe_tau_prefix_collapse():
    a = Automaton.build(["α"], ["x", "y", "z"], [("x", TAU, "y"), ("y", "α", "z")], ["x"], marked=["x", "y", "z"])
    part = marking_observation_equivalence(a)
    assert part.block_of[0] == part.block_of[1]
    assert part.block_of[2] != part.block_of[0]


def test_marking_oe_preserves_nonblocking_random():
    for seed in range(200):
        rng = make_rng(5000 + seed)
        a = random_automaton(rng, max_states=6) if seed % 2 else random_deterministic(rng, max_states=6)
        q = quotient(a, marking_observation_equivalence(a))
        assert brute_blocking(a) == brute_blocking(q), seed
