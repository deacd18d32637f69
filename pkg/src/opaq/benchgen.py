"""Scalable players/houses benchmark and a timing harness.

Model (one house, players A and B, rooms R1..R5):

* A starts in R1; R1 -uA2-> R2; R2 -u3-> R3 (u3 shared with B, the
  two-person room); R3 -τ-> R4 -τ-> R3 with R4 secret; R3 -uA5-> R5;
  R5 -uA1-> R1.
* B starts in R1 or R2; R1 -uB2-> R2; R2 -u3-> R3; R3 -uB1-> R1;
  R3 -uB5-> R5 with R5 secret; R5 -uB1'-> R1.

Players scaling repeats the pair with pair-indexed events.  Houses
scaling chains the houses: in house h > 1 each player waits in W until
the same player leaves house h-1 from R5 (event ``exitX.h-1``, which moves
the leaving copy to the away state O).
"""

import csv
import io
import os
import platform
import time
from dataclasses import dataclass

from .automaton import TAU, Automaton, ModelError
from .compose import ModularSystem, SecretMode

KINDS = ("players", "houses")


@dataclass(frozen=True)
class BenchmarkSpec:
    kind: str
    n: int
    mode: SecretMode = SecretMode.OR

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown benchmark kind {self.kind!r}")
        if int(self.n) < 1:
            raise ModelError("benchmark scale n must be at least 1")


def player_a(i, entry=None, exit_=None):
    s = f".{i}"
    states = ["R1", "R2", "R3", "R4", "R5"]
    events = ["uA2" + s, "u3" + s, "uA5" + s, "uA1" + s]
    trans = [
        ("R1", "uA2" + s, "R2"),
        ("R2", "u3" + s, "R3"),
        ("R3", TAU, "R4"),
        ("R4", TAU, "R3"),
        ("R3", "uA5" + s, "R5"),
        ("R5", "uA1" + s, "R1"),
    ]
    return _finish(f"A{i}", states, events, trans, ["R1"], ["R4"], entry, exit_)


def player_b(i, entry=None, exit_=None):
    s = f".{i}"
    states = ["R1", "R2", "R3", "R5"]
    events = ["uB2" + s, "u3" + s, "uB1" + s, "uB5" + s, "uB1'" + s]
    trans = [
        ("R1", "uB2" + s, "R2"),
        ("R2", "u3" + s, "R3"),
        ("R3", "uB1" + s, "R1"),
        ("R3", "uB5" + s, "R5"),
        ("R5", "uB1'" + s, "R1"),
    ]
    return _finish(f"B{i}", states, events, trans, ["R1", "R2"], ["R5"], entry, exit_)


def _finish(name, states, events, trans, initial, secret, entry, exit_):
    if entry is not None:
        states = ["W"] + states
        events = events + [entry]
        trans = [("W", entry, "R1")] + trans
        initial = ["W"]
    if exit_ is not None:
        states = states + ["O"]
        events = events + [exit_]
        trans = trans + [("R5", exit_, "O")]
    return Automaton.build(events, states, trans, initial, marked=(), secret=secret, name=name)


def generate(spec: BenchmarkSpec) -> ModularSystem:
    n = int(spec.n)
    comps = []
    if spec.kind == "players":
        for i in range(1, n + 1):
            comps += [player_a(i), player_b(i)]
    else:
        for h in range(1, n + 1):
            pair = []
            for who, make in (("A", player_a), ("B", player_b)):
                entry = f"exit{who}.{h - 1}" if h > 1 else None
                exit_ = f"exit{who}.{h}" if h < n else None
                pair.append(make(h, entry, exit_))
            comps += pair
    return ModularSystem(comps, spec.mode)


# ---------------------------------------------------------------------------
# harness

COLUMNS = ("model", "aut", "opaque", "ooe_ms", "cse_ms", "nonb_ms", "total_ms", "max_intermediate_states")


def run_one(spec: BenchmarkSpec, engine="compositional"):
    from .pipeline import verify_cso

    t0 = time.perf_counter()
    sys = generate(spec)
    verdict = verify_cso(sys, engine)
    total = time.perf_counter() - t0
    pt = verdict.phase_timings
    return {
        "model": f"{spec.n} {spec.kind.capitalize()}",
        "aut": len(sys),
        "opaque": verdict.opaque,
        "ooe_ms": 1000 * pt.get("ooe", 0.0),
        "cse_ms": 1000 * pt.get("cse", 0.0),
        "nonb_ms": 1000 * pt.get("nonblocking", pt.get("observer", 0.0)),
        "total_ms": 1000 * total,
        "max_intermediate_states": verdict.stats.get(
            "max_intermediate_states", verdict.stats.get("product_states")
        ),
        "witness": str(verdict.witness) if verdict.witness else "",
    }


def run_harness(kinds, scales, engine="compositional"):
    rows = []
    for kind in kinds:
        for n in scales:
            rows.append(run_one(BenchmarkSpec(kind, n), engine))
    return {"hardware": hardware(), "engine": engine, "rows": rows}


def hardware():
    return {
        "python": platform.python_version(),
        "machine": platform.machine(),
        "processor": platform.processor() or platform.machine(),
        "cpus": os.cpu_count(),
    }


def _fmt_ms(ms):
    return f"{ms / 1000:.1f} s" if ms >= 1000 else f"{ms:.0f} ms"


def format_table(report):
    header = f"{'Model':<16}{'Aut':>6}{'Opa.':>7}{'OOE':>10}{'CSE':>10}{'Nonb.':>10}{'max int.':>10}"
    lines = [header, "-" * len(header)]
    for r in report["rows"]:
        lines.append(
            f"{r['model']:<16}{r['aut']:>6}{str(r['opaque']):>7}{_fmt_ms(r['ooe_ms']):>10}"
            f"{_fmt_ms(r['cse_ms']):>10}{_fmt_ms(r['nonb_ms']):>10}{str(r['max_intermediate_states']):>10}"
        )
    return "\n".join(lines)


def to_csv(report):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(COLUMNS), extrasaction="ignore")
    w.writeheader()
    for r in report["rows"]:
        w.writerow(r)
    return buf.getvalue()
