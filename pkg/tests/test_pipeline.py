import math

import pytest

from _support import brute_cso, brute_kstep, make_rng, masked_system, random_automaton, random_system
from opaq.compose import ModularSystem, SecretMode
from opaq.fixtures import g1, g1_tilde, g2
from opaq.pipeline import verify, verify_cso, verify_infinite, verify_kstep
from opaq.verdict import Diagnosis, Status

S1234 = ("s1", "s2", "s3", "s4")


def test_example4_or():
    v = verify_cso(ModularSystem([g1(S1234), g2(("t1",))], SecretMode.OR))
    assert v.status is Status.NOT_OPAQUE
    assert str(v.witness) == "α ψ₁"
    assert set(v.phase_timings) == {"ooe", "cse", "nonblocking"}


def test_example5_and():
    v = verify_cso(ModularSystem([g1_tilde(secret=("[s1]", "[s2]")), g2(("t1",))], SecretMode.AND))
    assert v.status is Status.NOT_OPAQUE
    assert str(v.witness) == "α ψ"


def test_secret_free_system_is_opaque():
    comps = [random_automaton(make_rng(i)).replace(secret=frozenset()) for i in range(3)]
    sys_ = ModularSystem(comps)
    assert verify_cso(sys_).opaque
    assert verify_kstep(sys_, 2).opaque


def test_tilde_and_kstep_opaque():
    sys_ = ModularSystem([g1_tilde(secret=("[s1]",)), g2()], SecretMode.AND)
    assert verify_kstep(sys_, 1).opaque
    assert verify_infinite(sys_).opaque


def test_over_approximation_is_inconclusive_then_confirmed():
    sys_ = masked_system()
    v = verify_kstep(sys_, 1)
    assert v.status is Status.INCONCLUSIVE
    assert v.diagnosis is Diagnosis.OVER_APPROXIMATION
    assert verify_kstep(sys_, 1, engine="monolithic").opaque
    v2 = verify_kstep(sys_, 1, confirm_budget=10_000)
    assert v2.opaque and v2.stats["confirmed_monolithically"]


def test_g1_genuine_violation():
    v = verify_kstep(ModularSystem([g1()]), 1)
    assert v.status is Status.NOT_OPAQUE
    assert v.diagnosis is Diagnosis.GENUINE


def test_k0_matches_cso_monolithic_and_compositional():
    for seed in range(60):
        sys_ = random_system(make_rng(seed))
        cso = verify_cso(sys_, "monolithic").status
        assert verify_kstep(sys_, 0, "monolithic").status is cso
        assert verify_kstep(sys_, 0).status is verify_cso(sys_).status


def test_cso_exact_against_brute_force():
    for seed in range(100):
        sys_ = random_system(make_rng(40_000 + seed))
        assert verify_cso(sys_).opaque == brute_cso(sys_)[0], seed


def test_kstep_sound_against_brute_force():
    for seed in range(60):
        sys_ = random_system(make_rng(50_000 + seed))
        for k in (1, math.inf):
            v = verify_kstep(sys_, k)
            truth = brute_kstep(sys_, k)
            if v.status is Status.OPAQUE:
                assert truth, (seed, k)
            elif v.status is Status.NOT_OPAQUE:
                assert not truth, (seed, k)


def test_verify_dispatch_and_errors():
    sys_ = ModularSystem([g1()])
    assert verify(sys_, "cso").opaque
    assert verify(sys_, "inf").status is Status.NOT_OPAQUE
    assert verify(sys_, "kstep", 0).opaque
    with pytest.raises(ValueError):
        verify(sys_, "kstep")
    with pytest.raises(ValueError):
        verify(sys_, "nope")
    with pytest.raises(ValueError):
        verify_cso(sys_, engine="magic")


def test_verdict_json_shape():
    v = verify_kstep(ModularSystem([g1()]), 1)
    data = v.to_json()
    assert data["status"] == "NotOpaque"
    assert data["diagnosis"] == "GenuineViolationConfirmed"
    assert data["witness"]["trace"][-1] == "ψ₁"
    assert v.exit_code == 1
