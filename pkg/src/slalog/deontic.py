"""Obligations, prohibitions and permissions as event-calculus fluents.

Declarations are turned into facts (trigger and target detection times,
deadlines, waivers) that feed the ``deontic_axioms`` library module; the state
of norm N at time t is the ``norm_status(N, S)`` fluent just after t, so a
transition stamped t is already visible at t.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .defeasible import conclusions, theory_from_kb, theory_predicates
from .ec import EC_MODULE, holds_at, library_module
from .errors import NormError
from .events import detect
from .kb import AddModule, KnowledgeBase, RemoveModule, ReplaceModule, RuleModule, kb_apply
from .model import Norm
from .solver import TRUE, Solver, SolverConfig
from .terms import Compound, Const, Literal, Term, Var, atom, resolve, sym

AXIOMS = "deontic_axioms"
FACTS = "deontic"
STATES = ("inactive", "active", "fulfilled", "violated", "waived")
_RANK = {"fulfilled": 0, "waived": 1, "violated": 2, "active": 3}


@dataclass(frozen=True)
class NormState:
    state: str
    since: Optional[int] = None  # entry timestamp; None while inactive

    def __str__(self) -> str:
        return self.state if self.since is None else f"{self.state}@{self.since}"


def validate_norms(norms: Iterable[Norm]) -> dict:
    by_id: dict = {}
    for n in norms:
        if n.id in by_id:
            raise NormError(f"duplicate norm id {n.id!r}")
        by_id[n.id] = n
    for n in by_id.values():
        seen = [n.id]
        cur = n
        while cur.reparation is not None:
            if cur.reparation not in by_id:
                raise NormError(f"norm {cur.id!r}: reparation {cur.reparation!r} is not declared")
            if cur.reparation in seen:
                raise NormError(f"reparation cycle: {' -> '.join(seen + [cur.reparation])}")
            seen.append(cur.reparation)
            cur = by_id[cur.reparation]
    return by_id


def _i(v: int) -> Const:
    return Const(int(v), "int")


def _fact(functor: str, *args) -> Literal:
    return Literal(atom(functor, *args))


def _waivers(kb: KnowledgeBase, config: Optional[SolverConfig]) -> set:
    """(norm id, time) pairs; ``waived(N)`` without a time counts from activation (time 0)."""
    keys = {("waived", 1), ("waived", 2)}
    mentioned = any(r.head.atom.key in keys for r in kb.all_rules()) or any(f.atom.key in keys for f in kb.all_facts())
    if not mentioned:
        return set()
    out = set()
    if any(r.kind != "strict" for r in kb.all_rules()):
        theory = theory_from_kb(kb)
        if keys & theory_predicates(theory):
            for lit in conclusions(theory).plus_partial:
                a = lit.atom
                if lit.neg or a.key not in keys or not isinstance(a.args[0], Const):
                    continue
                t = a.args[1].value if len(a.args) == 2 and isinstance(a.args[1], Const) and a.args[1].kind == "int" else 0
                out.add((a.args[0].value, t))
            return out
    solver = Solver(kb, config)
    for ans in solver.solve([Literal(Compound("waived", (Var("N"),)))]):
        if ans.truth is TRUE and isinstance(ans["N"], Const):
            out.add((ans["N"].value, 0))
    for ans in solver.solve([Literal(Compound("waived", (Var("N"), Var("T"))))]):
        n, t = ans["N"], ans["T"]
        if ans.truth is TRUE and isinstance(n, Const) and isinstance(t, Const) and t.kind == "int":
            out.add((n.value, t.value))
    return out


def _fluent_times(kb: KnowledgeBase, fluent: Term, after: int, config) -> list:
    """Times at which ``fluent`` is achieved, for a ``holds(F)`` target."""
    probes = [(after + 1, after + 1)] + [(t, t + 1) for t, _ in kb.narrative if t > after]
    out = []
    for stamp, probe in sorted(set(probes)):
        if holds_at(kb, fluent, probe, config) is TRUE:
            out.append(stamp)
    return out


def _target_times(kb: KnowledgeBase, target: Term, upto, after: int, config) -> list:
    if isinstance(target, Compound) and target.functor == "holds" and len(target.args) == 1:
        return _fluent_times(kb, target.args[0], after, config)
    return sorted({d.end for d in detect(kb, target, upto)})


def norm_facts(kb: KnowledgeBase, upto: Optional[int] = None, config: Optional[SolverConfig] = None) -> RuleModule:
    """Facts describing every declared norm against the current narrative."""
    norms = validate_norms(kb.norms)
    base = kb if FACTS not in kb else kb_apply(kb, [RemoveModule(FACTS)])[0]
    base = base if EC_MODULE in base else kb_apply(base, [AddModule(library_module(EC_MODULE))])[0]
    repairs = {n.reparation for n in norms.values() if n.reparation}
    waivers = _waivers(base, config)
    facts: list = []
    for nid in sorted(norms):
        n = norms[nid]
        N = sym(nid)
        facts.append(_fact("norm_kind", N, sym(n.kind)))
        if n.reparation:
            facts.append(_fact("norm_reparation", N, sym(n.reparation)))
        bindings: dict = {}
        activated = None
        if n.trigger is not None:
            dets = detect(base, n.trigger, upto)
            if dets:
                activated = dets[0].end
                bindings = dets[0].as_dict()
                facts.append(_fact("norm_trigger", N, _i(activated)))
        elif nid not in repairs:
            activated = 0
            facts.append(_fact("norm_trigger", N, _i(0)))
        if n.kind == "permission":
            continue
        if not n.standing:
            facts.append(_fact("norm_deadline", N, sym("relative" if n.relative else "absolute"), _i(n.deadline)))
            facts.append(_fact("norm_expiry", N, sym("violated" if n.kind == "obligation" else "fulfilled")))
        after = activated if activated is not None else -1
        target = resolve(n.target, bindings)
        if n.kind == "obligation" and not n.standing:
            for t in _target_times(base, target, upto, after, config):
                facts.append(_fact("norm_good", N, _i(t)))
        elif n.kind == "prohibition":
            for t in _target_times(base, target, upto, after, config):
                facts.append(_fact("norm_bad", N, _i(t)))
        if n.breach is not None:
            for t in _target_times(base, resolve(n.breach, bindings), upto, after, config):
                facts.append(_fact("norm_bad", N, _i(t)))
        for wid, t in sorted(waivers):
            if wid == nid:
                facts.append(_fact("norm_waiver", N, _i(t)))
    return RuleModule(FACTS, facts=tuple(dict.fromkeys(facts)))


def with_deontic(kb: KnowledgeBase, upto: Optional[int] = None, config: Optional[SolverConfig] = None) -> KnowledgeBase:
    """``kb`` with the EC and deontic axioms loaded and the norm facts refreshed."""
    updates = []
    if EC_MODULE not in kb:
        updates.append(AddModule(library_module(EC_MODULE)))
    if AXIOMS not in kb:
        updates.append(AddModule(library_module(AXIOMS)))
    updates.append(ReplaceModule(norm_facts(kb, upto, config)))
    return kb_apply(kb, updates)[0]


def _ensure(kb: KnowledgeBase, refresh: bool, config) -> KnowledgeBase:
    if refresh or FACTS not in kb or AXIOMS not in kb:
        return with_deontic(kb, config=config)
    return kb


def norm_state(kb: KnowledgeBase, norm_id: str, t: int, refresh: bool = True, config: Optional[SolverConfig] = None) -> NormState:
    if norm_id not in {n.id for n in kb.norms}:
        raise NormError(f"unknown norm {norm_id!r}")
    kb = _ensure(kb, refresh, config)
    solver = Solver(kb, config)
    S = Var("S")
    goal = Literal(Compound("holds_at", (Compound("norm_status", (sym(norm_id), S)), _i(t + 1))))
    states = [a["S"].value for a in solver.solve([goal]) if a.truth is TRUE and isinstance(a["S"], Const)]
    if not states:
        return NormState("inactive")
    state = min(states, key=_RANK.__getitem__)
    T = Var("T")
    if state == "active":
        q = Literal(Compound("norm_activated", (sym(norm_id), T)))
    else:
        q = Literal(Compound("norm_outcome", (sym(norm_id), sym(state), T)))
    times = [a["T"].value for a in solver.solve([q]) if a.truth is TRUE]
    return NormState(state, min(times) if times else None)


def violations(kb: KnowledgeBase, t: Optional[int] = None, refresh: bool = True, config: Optional[SolverConfig] = None) -> list:
    """(norm id, violation time) pairs with time <= t, by time then id."""
    kb = _ensure(kb, refresh, config)
    q = Literal(Compound("norm_outcome", (Var("N"), sym("violated"), Var("T"))))
    out = set()
    for a in Solver(kb, config).solve([q]):
        if a.truth is TRUE and (t is None or a["T"].value <= t):
            out.add((a["N"].value, a["T"].value))
    return sorted(out, key=lambda x: (x[1], x[0]))
