import pytest

from opaq.automaton import ModelError
from opaq.benchgen import (
    COLUMNS,
    BenchmarkSpec,
    format_table,
    generate,
    player_a,
    player_b,
    run_harness,
    run_one,
    to_csv,
)
from opaq.compose import ModularSystem
from opaq.pipeline import verify_cso


def test_player_models():
    a = player_a(1)
    assert a.n_states == 5 and {a.states[i] for i in a.secret} == {"R4"}
    b = player_b(1)
    assert b.n_states == 4 and {b.states[i] for i in b.initial} == {"R1", "R2"}
    shared = set(a.events) & set(b.events)
    assert shared == {"u3.1"}


def test_sizes():
    assert len(generate(BenchmarkSpec("players", 1))) == 2
    assert len(generate(BenchmarkSpec("houses", 10))) == 20
    assert len(generate(BenchmarkSpec("players", 7))) == 14


def test_houses_chain_events():
    sys_ = generate(BenchmarkSpec("houses", 3))
    a2 = sys_.components[2]
    assert "exitA.1" in a2.events and "exitA.2" in a2.events
    assert {a2.states[i] for i in a2.initial} == {"W"}


@pytest.mark.parametrize("kind", ["players", "houses"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_small_instances_not_opaque_both_engines(kind, n):
    sys_ = generate(BenchmarkSpec(kind, n))
    assert not verify_cso(sys_).opaque
    assert not verify_cso(sys_, "monolithic").opaque


def test_and_mode_agrees_with_monolithic():
    for kind in ("players", "houses"):
        sys_ = generate(BenchmarkSpec(kind, 2, "and"))
        assert verify_cso(sys_).opaque == verify_cso(sys_, "monolithic").opaque


def test_bad_specs():
    with pytest.raises(ModelError):
        BenchmarkSpec("castles", 2)
    with pytest.raises(ModelError):
        BenchmarkSpec("players", 0)


def test_harness_report():
    report = run_harness(["players", "houses"], [10])
    assert len(report["rows"]) == 2
    for row in report["rows"]:
        assert row["opaque"] is False
        assert row["total_ms"] < 5000
    text = format_table(report)
    assert "10 Players" in text and "10 Houses" in text
    csv_text = to_csv(report)
    assert csv_text.splitlines()[0] == ",".join(COLUMNS)
    assert "cpus" in report["hardware"]


def test_empty_range():
    assert run_harness(["players"], [])["rows"] == []
    assert run_harness([], [10])["rows"] == []


def test_houses_hundred_phase_timings():
    row = run_one(BenchmarkSpec("houses", 100))
    assert row["opaque"] is False
    assert all(row[k] >= 0 for k in ("ooe_ms", "cse_ms", "nonb_ms"))


def test_generated_system_type():
    assert isinstance(generate(BenchmarkSpec("players", 2)), ModularSystem)
