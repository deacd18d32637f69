"""``opaq`` command line.  Exit codes: 0 Opaque, 1 NotOpaque, 2 Inconclusive, 3 error."""

import argparse
import sys

from . import _kernels, io
from .abstraction import abstract_with_partition, block_map
from .automaton import ModelError
from .benchgen import KINDS, BenchmarkSpec, format_table, generate, run_harness, to_csv
from .compose import BudgetExceeded, sync_all
from .nonblocking import check_nonblocking, check_nonblocking_compositional
from .observers import determinize, two_way_observer
from .pipeline import ENGINES, verify
from .psi import build_psi_system
from .verdict import event_str

EXIT_ERROR = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"opaq: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _out(text, path=None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _emit_automaton(a, args, names=None, extra=None):
    if getattr(args, "dot", False):
        _out(io.to_dot(a, names), args.out)
        return
    data = io.model_to_dict(a, names)
    if extra:
        data.update(extra)
    _out(io.dumps(data), args.out)


# -- commands ---------------------------------------------------------------


def cmd_parse(args):
    a = io.load_model(args.model)
    if args.json:
        _out(io.dumps({"summary": a.summary(), "model": io.model_to_dict(a)}))
    else:
        _out(a.summary())
    return 0


def cmd_compose(args):
    system = io.load_system(args.system, args.mode)
    _emit_automaton(sync_all(system), args)
    return 0


def cmd_abstract(args):
    a = io.load_model(args.model)
    base, part, q = abstract_with_partition(a)
    if args.dot:
        _out(io.to_dot(q), args.out)
    else:
        _out(io.dumps({"quotient": io.model_to_dict(q), "blocks": block_map(base, part, q)}), args.out)
    return 0


def cmd_observer(args):
    a = io.load_model(args.model)
    d = determinize(a)
    names = [io.set_name(d.source.states[m] for m in ms) for ms in d.members]
    _emit_automaton(d.automaton, args, names)
    return 0


def cmd_twoway(args):
    a = io.load_model(args.model)
    h = two_way_observer(a)
    src = a.states
    names = [
        "(" + io.set_name(src[m] for m in f) + "," + io.set_name(src[m] for m in b) + ")"
        for f, b in zip(h.forward, h.backward)
    ]
    _emit_automaton(h.automaton, args, names)
    return 0


def _prop(args):
    if args.property == "cso":
        return "cso", None
    if args.property == "inf":
        return "kstep", float("inf")
    if args.k is None:
        raise ModelError("--k is required for kstep")
    return "kstep", args.k


def cmd_psi(args):
    system = io.load_system(args.system, args.mode)
    kind, k = _prop(args)
    ps = build_psi_system(system, kind, k if k is not None else float("inf"))
    comps = [io.model_to_dict(c) for c in ps.components]
    _out(io.dumps({"mode": system.mode.value, "psi_events": [event_str(e) for e in ps.events], "components": comps}), args.out)
    return 0


def cmd_nonblocking(args):
    system = io.load_system(args.system, args.mode, allow_reserved=True)
    if args.engine == "monolithic":
        result = check_nonblocking(sync_all(system))
    else:
        result = check_nonblocking_compositional(system.components)
    if args.cex_out and result.counterexample is not None:
        _out(io.dumps(result.counterexample.to_json()), args.cex_out)
    if args.json:
        data = {"result": result.label, "stats": result.stats}
        if result.counterexample is not None:
            data["counterexample"] = result.counterexample.to_json()
        _out(io.dumps(data))
    else:
        _out(str(result))
    return 1 if result.blocking else 0


def cmd_verify(args):
    system = io.load_system(args.system, args.mode)
    kw = {}
    if args.property != "cso":
        kw["confirm_budget"] = args.confirm_budget
        kw["diagnose_budget"] = args.diagnose_budget
    if args.property == "kstep" and args.k is None:
        raise ModelError("--k is required for kstep")
    verdict = verify(system, args.property, args.k, args.engine, **kw)
    if args.json:
        _out(io.dumps(verdict.to_json()))
    else:
        _out(verdict.status.value)
        if verdict.witness is not None:
            _out(f"witness: {verdict.witness}")
        if verdict.diagnosis is not None:
            _out(f"diagnosis: {verdict.diagnosis.value}")
    return verdict.exit_code


def cmd_gen(args):
    system = generate(BenchmarkSpec(args.kind, args.n, args.mode or "or"))
    _out(io.dumps(io.system_to_dict(system)), args.out)
    return 0


def cmd_bench(args):
    kinds = [k.strip() for k in args.kind.split(",") if k.strip()]
    scales = [int(s) for s in args.scales.split(",") if s.strip()]
    report = run_harness(kinds, scales, args.engine)
    if args.csv:
        _out(to_csv(report), args.csv)
    if args.json:
        _out(io.dumps(report))
    else:
        _out(format_table(report))
        _out(f"backend: {_kernels.backend()}, cpus: {report['hardware']['cpus']}")
    return 0


def cmd_export(args):
    a = io.load_model(args.model)
    if args.dot:
        _out(io.to_dot(a), args.out)
    else:
        _out(io.dumps(io.model_to_dict(a)), args.out)
    return 0


# -- argument parsing -------------------------------------------------------


def _k_arg(value):
    from .verdict import parse_k

    try:
        return parse_k(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    p = _Parser(prog="opaq", description="Compositional opacity verification")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("parse", cmd_parse, "validate a model and print a summary")
    sp.add_argument("model")
    sp.add_argument("--json", action="store_true")

    sp = add("compose", cmd_compose, "synchronous product of a system")
    sp.add_argument("system")
    sp.add_argument("--mode", choices=["or", "and"])
    sp.add_argument("--dot", action="store_true")
    sp.add_argument("--out")

    sp = add("abstract", cmd_abstract, "opaque observation equivalence quotient")
    sp.add_argument("--ooe", action="store_true", help="use opaque observation equivalence (the only method)")
    sp.add_argument("model")
    sp.add_argument("--dot", action="store_true")
    sp.add_argument("--out")

    for name, fn, help_ in (
        ("observer", cmd_observer, "current-state estimator"),
        ("twoway", cmd_twoway, "two-way observer"),
    ):
        sp = add(name, fn, help_)
        sp.add_argument("model")
        sp.add_argument("--dot", action="store_true")
        sp.add_argument("--out")

    sp = add("psi", cmd_psi, "ψ-transformed observer components")
    sp.add_argument("system")
    sp.add_argument("--property", choices=["cso", "inf", "kstep"], default="cso")
    sp.add_argument("--k", type=_k_arg)
    sp.add_argument("--mode", choices=["or", "and"])
    sp.add_argument("--out")

    sp = add("nonblocking", cmd_nonblocking, "nonblocking check (exit 0 nonblocking, 1 blocking)")
    sp.add_argument("system")
    sp.add_argument("--engine", choices=ENGINES, default="compositional")
    sp.add_argument("--mode", choices=["or", "and"])
    sp.add_argument("--cex-out")
    sp.add_argument("--json", action="store_true")

    sp = add("verify", cmd_verify, "verify an opacity property")
    sp.add_argument("property", choices=["cso", "kstep", "inf"])
    sp.add_argument("system")
    sp.add_argument("--k", type=_k_arg)
    sp.add_argument("--mode", choices=["or", "and"])
    sp.add_argument("--engine", choices=ENGINES, default="compositional")
    sp.add_argument("--confirm-budget", type=int, default=None)
    sp.add_argument("--diagnose-budget", type=int, default=200_000)
    sp.add_argument("--json", action="store_true")

    sp = add("gen", cmd_gen, "generate a benchmark system")
    sp.add_argument("kind", choices=KINDS)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--mode", choices=["or", "and"])
    sp.add_argument("--out")

    sp = add("bench", cmd_bench, "run the benchmark harness")
    sp.add_argument("--kind", default="players,houses")
    sp.add_argument("--scales", default="10,100")
    sp.add_argument("--engine", choices=ENGINES, default="compositional")
    sp.add_argument("--csv")
    sp.add_argument("--json", action="store_true")

    sp = add("export", cmd_export, "re-emit a model as JSON or DOT")
    sp.add_argument("model")
    sp.add_argument("--dot", action="store_true")
    sp.add_argument("--out")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        return args.fn(args)
    except (ModelError, ValueError, OSError, BudgetExceeded) as exc:
        print(f"opaq: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
