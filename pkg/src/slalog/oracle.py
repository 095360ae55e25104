"""Bottom-up reference semantics: ground the KB, run the alternating fixpoint.

Deliberately naive and independent of :mod:`slalog.solver`; it exists to
check the solver, not to be fast.
"""
from __future__ import annotations

import itertools
from .errors import ResourceError
from .kb import KnowledgeBase
from .solver import FALSE, TRUE, UNDEFINED, TruthValue
from .terms import Literal, Rule, constants, is_ground, literal_vars, resolve, unify_into


def herbrand_universe(kb: KnowledgeBase) -> list:
    consts: set = set()
    for r in kb.all_rules():
        if r.kind != "strict":
            continue
        for lit in (r.head,) + tuple(r.body):
            constants(lit.atom, consts)
    for f in kb.all_facts():
        constants(f.atom, consts)
    return sorted(consts, key=lambda c: (c.kind, str(c.value)))


def ground_program(kb: KnowledgeBase, max_instances: int = 200_000) -> list:
    """Ground instances (head, positive body, negative body) of the strict rules and facts.

    Attachment and ``=`` literals are evaluated away once ground.
    """
    universe = herbrand_universe(kb)
    rules = [r for r in kb.all_rules() if r.kind == "strict"]
    clauses = [(Literal(f.atom, f.neg), (), ()) for f in kb.all_facts() if is_ground(f.atom)]
    for f in kb.all_facts():
        if not is_ground(f.atom):
            rules.append(_as_rule(f))
    count = len(clauses)
    for r in rules:
        vs = list(literal_vars((r.head,) + tuple(r.body)).values())
        for combo in itertools.product(universe, repeat=len(vs)):
            count += 1
            if count > max_instances:
                raise ResourceError(f"grounding exceeds {max_instances} rule instances")
            s = {}
            ok = True
            for v, c in zip(vs, combo):
                if v.type is not None and v.type != "thing" and not kb.types.subtype_of(kb.types.type_of(c), v.type):
                    ok = False
                    break
                s[v.name] = c
            if not ok:
                continue
            inst = _instantiate(kb, r, s)
            if inst is not None:
                clauses.append(inst)
    return clauses


def _as_rule(f: Literal) -> Rule:
    return Rule(Literal(f.atom, f.neg))


def _instantiate(kb: KnowledgeBase, rule, s: dict):
    head = Literal(resolve(rule.head.atom, s), rule.head.neg)
    pos, neg = [], []
    for b in rule.body:
        a = resolve(b.atom, s)
        if a.functor == "=" and len(a.args) == 2 and not b.neg:
            holds = unify_into(a.args[0], a.args[1], {})
            if holds == b.naf:
                return None
            continue
        att = None if b.neg else kb.attachments.get(a.functor, len(a.args))
        if att is not None:
            rows = att.call(a.args)
            outs = [x for x, m in zip(a.args, att.modes) if m == "out"]
            holds = any(all(x == y for x, y in zip(outs, row)) for row in rows)
            if holds == b.naf:
                return None
            continue
        (neg if b.naf else pos).append(Literal(a, b.neg))
    return head, tuple(pos), tuple(neg)


def _gamma(clauses: list, assumed: set) -> set:
    """Least model of the reduct: ``not a`` holds iff a is not in ``assumed``."""
    model: set = set()
    changed = True
    while changed:
        changed = False
        for head, pos, neg in clauses:
            if head in model:
                continue
            if all(p in model for p in pos) and not any(n in assumed for n in neg):
                model.add(head)
                changed = True
    return model


def alternating_fixpoint(clauses: list) -> dict:
    atoms: set = set()
    for head, pos, neg in clauses:
        atoms.add(head)
        atoms.update(pos)
        atoms.update(neg)
    true: set = set()
    possible = _gamma(clauses, true)
    while True:
        new_true = _gamma(clauses, possible)
        new_possible = _gamma(clauses, new_true)
        if new_true == true and new_possible == possible:
            break
        true, possible = new_true, new_possible
    return {a: (TRUE if a in true else UNDEFINED if a in possible else FALSE) for a in atoms}


def ground_wfs_oracle(kb: KnowledgeBase, max_instances: int = 200_000) -> dict:
    """Map every ground literal of the grounded KB to its well-founded truth value."""
    return alternating_fixpoint(ground_program(kb, max_instances))


def oracle_truth(model: dict, lit: Literal) -> TruthValue:
    tv = model.get(Literal(lit.atom, lit.neg), FALSE)
    return tv.complement() if lit.naf else tv
