"""Result types shared by the oracles, the nonblocking checker and the pipeline."""

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .automaton import PairEvent


class Status(enum.Enum):
    OPAQUE = "Opaque"
    NOT_OPAQUE = "NotOpaque"
    INCONCLUSIVE = "Inconclusive"

    @property
    def exit_code(self):
        return {Status.OPAQUE: 0, Status.NOT_OPAQUE: 1, Status.INCONCLUSIVE: 2}[self]


class Diagnosis(enum.Enum):
    GENUINE = "GenuineViolationConfirmed"
    OVER_APPROXIMATION = "OverApproximation"
    UNKNOWN = "Unknown"


PSI_PREFIX = "__psi"


def is_psi(event):
    return isinstance(event, str) and event.startswith(PSI_PREFIX)


def psi_index(event):
    """Component index (0-based) encoded in ``__psi_<i>``, else ``None``."""
    if isinstance(event, str) and event.startswith(PSI_PREFIX + "_"):
        return int(event[len(PSI_PREFIX) + 1:]) - 1
    return None


_SUBSCRIPTS = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")


def event_str(e):
    if is_psi(e):
        i = psi_index(e)
        return "ψ" if i is None else "ψ" + str(i + 1).translate(_SUBSCRIPTS)
    return str(e)


def trace_str(trace):
    return " ".join(event_str(e) for e in trace) if trace else "ε"


def decode_pair_trace(trace):
    """Split a doubled-alphabet trace into ``(forward, future)``.

    ``forward`` is the observed past; ``future`` is the continuation whose
    reverse reading produced the second estimate.
    """
    fwd = tuple(e.label for e in trace if isinstance(e, PairEvent) and e.forward)
    rev = tuple(e.label for e in trace if isinstance(e, PairEvent) and not e.forward)
    return fwd, tuple(reversed(rev))


@dataclass
class Counterexample:
    trace: tuple
    end_state: Any = None
    component_blame: Optional[int] = None

    def __str__(self):
        return trace_str(self.trace)

    def to_json(self):
        out = {"trace": [event_str(e) for e in self.trace], "pretty": str(self)}
        if self.end_state is not None:
            out["end_state"] = _jsonable(self.end_state)
        if self.component_blame is not None:
            out["component_blame"] = self.component_blame
        return out


@dataclass
class Verdict:
    status: Status
    witness: Optional[Counterexample] = None
    diagnosis: Optional[Diagnosis] = None
    phase_timings: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def opaque(self):
        return self.status is Status.OPAQUE

    @property
    def exit_code(self):
        return self.status.exit_code

    def __str__(self):
        text = self.status.value
        if self.witness is not None:
            text += f" (witness: {self.witness})"
        if self.diagnosis is not None:
            text += f" [{self.diagnosis.value}]"
        return text

    def to_json(self):
        out = {"status": self.status.value}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
            fwd, fut = decode_pair_trace(self.witness.trace)
            if fwd or fut:
                out["witness"]["decoded"] = {"observed": list(map(str, fwd)), "future": list(map(str, fut))}
        if self.diagnosis is not None:
            out["diagnosis"] = self.diagnosis.value
        if self.phase_timings:
            out["phase_timings"] = {k: round(v, 6) for k, v in self.phase_timings.items()}
        if self.stats:
            out["stats"] = _jsonable(self.stats)
        return out


def _jsonable(obj):
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((_jsonable(x) for x in obj), key=str)
    return str(obj)


INFINITY = math.inf


def parse_k(value):
    """Accept a non-negative int, ``math.inf``, or the strings ``inf``/``∞``."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "∞"):
            return INFINITY
        value = int(value)
    if value == INFINITY:
        return INFINITY
    if int(value) != value or value < 0:
        raise ValueError(f"K must be a non-negative integer or infinity, got {value!r}")
    return int(value)
