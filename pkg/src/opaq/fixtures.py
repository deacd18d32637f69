"""Small reference models used by the tests, the docs and the CLI fixtures."""

from .automaton import TAU, Automaton


def g1(secret=("s1", "s3")):
    """Example automaton with a τ-step on each α-branch; s5 is the marked terminal state."""
    return Automaton.build(
        ["α", "β"],
        ["s0", "s1", "s2", "s3", "s4", "s5"],
        [
            ("s0", "α", "s1"),
            ("s0", "α", "s2"),
            ("s1", TAU, "s3"),
            ("s2", TAU, "s4"),
            ("s1", "β", "s5"),
            ("s3", "β", "s5"),
        ],
        initial=["s0"],
        marked=["s5"],
        secret=secret,
        name="G1",
    )


def g2(secret=()):
    return Automaton.build(
        ["α", "β"],
        ["t0", "t1"],
        [("t0", "α", "t1"), ("t1", "β", "t0")],
        initial=["t0"],
        secret=secret,
        name="G2",
    )


def g1_tilde(secret=("[s1]",)):
    """The 4-state quotient of G1 written out by hand."""
    return Automaton.build(
        ["α", "β"],
        ["s0", "[s1]", "[s2]", "s5"],
        [
            ("s0", "α", "[s1]"),
            ("s0", "α", "[s2]"),
            ("[s1]", "β", "s5"),
        ],
        initial=["s0"],
        marked=["s5"],
        secret=secret,
        name="G1~",
    )
