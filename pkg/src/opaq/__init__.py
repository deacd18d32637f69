"""Opacity verification for modular nondeterministic automata."""

from .automaton import (
    TAU,
    Automaton,
    ModelError,
    PairEvent,
    Partition,
    project,
    quotient,
    rename_forward,
    rename_reverse,
    reverse,
    weak_step,
)
from .compose import ModularSystem, SecretMode, sync, sync_all

__version__ = "0.1.0"
