import math

import pytest
from hypothesis import given, settings, strategies as st

from _support import brute_blocking, brute_kstep, make_rng, masked_system, random_automaton, random_deterministic
from opaq.automaton import Automaton, ModelError, PairEvent, weak_step
from opaq.benchgen import BenchmarkSpec, generate
from opaq.compose import ModularSystem, SecretMode, sync_all
from opaq.fixtures import g1, g1_tilde, g2
from opaq.nonblocking import (
    blocking_states,
    check_nonblocking,
    check_nonblocking_compositional,
    diagnose_overapprox,
)
from opaq.psi import build_psi_system
from opaq.verdict import Counterexample, Diagnosis

S1234 = ("s1", "s2", "s3", "s4")


def replay_hits_blocking(components, trace):
    p = sync_all(ModularSystem(components))
    reached = weak_step(p, p.initial, trace)
    return bool(reached & blocking_states(p))


def test_example4_blocks_on_alpha_psi1():
    ps = build_psi_system(ModularSystem([g1(S1234), g2(("t1",))], SecretMode.OR), "cso")
    mono = check_nonblocking(sync_all(ModularSystem(ps.components)))
    assert mono.blocking and str(mono.counterexample) == "α ψ₁"
    comp = check_nonblocking_compositional(ps.components)
    assert comp.blocking and str(comp.counterexample) == "α ψ₁"
    assert comp.counterexample.component_blame == 0


def test_all_marked_is_nonblocking():
    a = random_automaton(make_rng(1))
    a = a.replace(marked=frozenset(range(a.n_states)))
    assert not check_nonblocking(a).blocking


def test_monolithic_matches_naive_oracle():
    for seed in range(300):
        rng = make_rng(seed)
        a = random_automaton(rng, max_states=6) if seed % 2 else random_deterministic(rng, max_states=6)
        assert check_nonblocking(a).blocking == brute_blocking(a), seed


def test_singleton_list_same_as_monolithic():
    for seed in range(40):
        a = random_automaton(make_rng(seed), max_states=6)
        assert check_nonblocking_compositional([a]).blocking == check_nonblocking(a).blocking


def test_players_ten_blocking():
    ps = build_psi_system(generate(BenchmarkSpec("players", 10)), "cso")
    assert check_nonblocking_compositional(ps.components).blocking


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**7))
def test_compositional_matches_monolithic(seed):
    rng = make_rng(seed)
    comps = [random_automaton(rng, max_states=5) for _ in range(rng.randint(2, 3))]
    mono = check_nonblocking(sync_all(ModularSystem(comps)))
    comp = check_nonblocking_compositional(comps)
    assert comp.blocking == mono.blocking
    if comp.blocking:
        assert replay_hits_blocking(comps, comp.counterexample.trace)


def test_compositional_counterexamples_replay_on_psi_systems():
    for seed in range(60):
        rng = make_rng(3000 + seed)
        comps = [random_automaton(rng) for _ in range(rng.randint(2, 3))]
        ps = build_psi_system(ModularSystem(comps, rng.choice(list(SecretMode))), "cso")
        res = check_nonblocking_compositional(ps.components)
        if res.blocking:
            assert replay_hits_blocking(ps.components, res.counterexample.trace), seed


def test_stats_reported():
    ps = build_psi_system(generate(BenchmarkSpec("houses", 3)), "cso")
    res = check_nonblocking_compositional(ps.components)
    assert res.stats["max_intermediate_states"] >= 1
    assert res.stats["compositions"] >= 1


def test_diagnose_over_approximation():
    sys_ = masked_system()
    assert brute_kstep(sys_, math.inf)
    ps = build_psi_system(sys_, "kstep", math.inf)
    res = check_nonblocking_compositional(ps.components)
    assert res.blocking
    abstracted = ModularSystem(ps.abstracted, sys_.mode)
    assert diagnose_overapprox(abstracted, res.counterexample) is Diagnosis.OVER_APPROXIMATION


def test_diagnose_genuine_on_g1():
    sys_ = ModularSystem([g1()])
    ps = build_psi_system(sys_, "kstep", math.inf)
    res = check_nonblocking_compositional(ps.components)
    assert res.blocking
    assert diagnose_overapprox(ModularSystem(ps.abstracted), res.counterexample) is Diagnosis.GENUINE


def test_diagnose_never_genuine_for_opaque_systems():
    for seed in range(80):
        rng = make_rng(9000 + seed)
        sys_ = ModularSystem([random_automaton(rng) for _ in range(2)], rng.choice(list(SecretMode)))
        for k in (1, math.inf):
            if not brute_kstep(sys_, k):
                continue
            ps = build_psi_system(sys_, "kstep", k)
            res = check_nonblocking_compositional(ps.components)
            if res.blocking:
                d = diagnose_overapprox(ModularSystem(ps.abstracted, sys_.mode), res.counterexample, k)
                assert d is not Diagnosis.GENUINE, (seed, k)


def test_diagnose_budget_gives_unknown():
    cex = Counterexample((PairEvent("α", True), PairEvent("β", False), "__psi_1"))
    big = ModularSystem([g1(), g2()])
    assert diagnose_overapprox(big, cex, budget=1) is Diagnosis.UNKNOWN


def test_diagnose_rejects_non_psi_traces():
    with pytest.raises(ModelError):
        diagnose_overapprox(ModularSystem([g1()]), Counterexample(("α",)))
    with pytest.raises(ModelError):
        diagnose_overapprox(ModularSystem([g1()]), Counterexample(("α", "__psi_1")))


def test_tilde_and_two_way_nonblocking():
    sys_ = ModularSystem([g1_tilde(secret=("[s1]",)), g2()], SecretMode.AND)
    for k in (1, math.inf):
        ps = build_psi_system(sys_, "kstep", k)
        assert not check_nonblocking_compositional(ps.components).blocking
