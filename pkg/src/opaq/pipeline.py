"""End-to-end verification: abstract, observe, ψ-transform, check nonblocking."""

import time

from .compose import BudgetExceeded, ModularSystem, sync_all
from .nonblocking import DEFAULT_DIAGNOSE_BUDGET, check_nonblocking_compositional, diagnose_overapprox
from .observers import oracle_cso, oracle_kstep
from .psi import build_psi_system, check_reserved
from .verdict import Diagnosis, Status, Verdict, parse_k

ENGINES = ("compositional", "monolithic")


def _check_engine(engine):
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")


def _monolithic(sys, oracle):
    check_reserved(sys)
    t0 = time.perf_counter()
    product = sync_all(sys)
    t1 = time.perf_counter()
    verdict = oracle(product)
    verdict.phase_timings = {"compose": t1 - t0, "observer": time.perf_counter() - t1}
    verdict.stats["product_states"] = product.n_states
    return verdict


def verify_cso(sys: ModularSystem, engine="compositional", budget=None) -> Verdict:
    """Current-state opacity; the compositional answer is exact."""
    _check_engine(engine)
    if engine == "monolithic":
        return _monolithic(sys, oracle_cso)
    psi = build_psi_system(sys, "cso")
    t0 = time.perf_counter()
    result = check_nonblocking_compositional(psi.components, budget=budget)
    timings = {"ooe": psi.timings["ooe"], "cse": psi.timings["cse"] + psi.timings["psi"],
               "nonblocking": time.perf_counter() - t0}
    stats = dict(result.stats)
    stats["psi_states"] = sum(len(b) for b in psi.psi_states)
    if result.blocking:
        return Verdict(Status.NOT_OPAQUE, result.counterexample, phase_timings=timings, stats=stats)
    return Verdict(Status.OPAQUE, phase_timings=timings, stats=stats)


def verify_kstep(
    sys: ModularSystem,
    k,
    engine="compositional",
    budget=None,
    diagnose_budget=DEFAULT_DIAGNOSE_BUDGET,
    confirm_budget=None,
) -> Verdict:
    """K-step opacity (``k`` may be infinite).

    The compositional engine is sufficient only: a nonblocking ψ-system
    proves opacity; blocking is diagnosed and yields NotOpaque only when the
    violation is confirmed on the composed system.  With ``confirm_budget``
    an inconclusive answer is retried monolithically under that budget.
    """
    _check_engine(engine)
    k = parse_k(k)
    if engine == "monolithic":
        return _monolithic(sys, lambda p: oracle_kstep(p, k))
    psi = build_psi_system(sys, "kstep", k)
    t0 = time.perf_counter()
    result = check_nonblocking_compositional(psi.components, budget=budget)
    timings = {"ooe": psi.timings["ooe"], "cse": psi.timings["cse"] + psi.timings["psi"],
               "nonblocking": time.perf_counter() - t0}
    stats = dict(result.stats)
    if not result.blocking:
        return Verdict(Status.OPAQUE, phase_timings=timings, stats=stats)
    t0 = time.perf_counter()
    abstracted = ModularSystem(psi.abstracted, sys.mode)
    diagnosis = diagnose_overapprox(abstracted, result.counterexample, k, budget=diagnose_budget)
    timings["diagnosis"] = time.perf_counter() - t0
    if diagnosis is Diagnosis.GENUINE:
        return Verdict(Status.NOT_OPAQUE, result.counterexample, diagnosis, timings, stats)
    if confirm_budget is not None:
        t0 = time.perf_counter()
        try:
            mono = oracle_kstep(sync_all(abstracted, budget=confirm_budget), k, budget=confirm_budget)
        except BudgetExceeded:
            mono = None
        timings["confirm"] = time.perf_counter() - t0
        if mono is not None:
            stats["confirmed_monolithically"] = True
            if mono.opaque:
                return Verdict(Status.OPAQUE, None, diagnosis, timings, stats)
            return Verdict(Status.NOT_OPAQUE, mono.witness, Diagnosis.GENUINE, timings, stats)
    return Verdict(Status.INCONCLUSIVE, result.counterexample, diagnosis, timings, stats)


def verify_infinite(sys: ModularSystem, engine="compositional", **kw) -> Verdict:
    return verify_kstep(sys, float("inf"), engine, **kw)


def verify(sys: ModularSystem, prop="cso", k=None, engine="compositional", **kw) -> Verdict:
    """Dispatch on ``prop`` in ``cso``, ``kstep`` or ``inf``."""
    if prop == "cso":
        return verify_cso(sys, engine, budget=kw.get("budget"))
    if prop == "inf":
        return verify_infinite(sys, engine, **kw)
    if prop == "kstep":
        if k is None:
            raise ValueError("kstep needs K")
        return verify_kstep(sys, k, engine, **kw)
    raise ValueError(f"unknown property {prop!r}")
