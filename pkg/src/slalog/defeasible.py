"""Defeasible logic over strict rules, defeasible rules, defeaters and superiority.

Variant: ambiguity blocking, no team defeat.  A supporting rule must itself be
superior to every applicable attacker.  Conclusions are the least fixpoint of
the four proof conditions, so loops leave a literal with neither tag.

Two routes to the same conclusions:

* :func:`prove` evaluates the conditions directly over a ground theory;
* :func:`compile` emits a negation-free meta-program for the core solver whose
  least model contains ``defeasibly(L)`` exactly for the +∂ literals.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Union

from .errors import ResourceError, TheoryError
from .kb import KnowledgeBase, RuleModule
from .terms import (
    UNTYPED,
    Compound,
    Const,
    Literal,
    Rule,
    constants,
    format_literal,
    is_ground,
    literal_to_term,
    literal_vars,
    resolve,
    term_order,
    term_vars,
    unify_into,
)

DEFAULT_GROUNDING_BOUND = 200_000


class ProofTag(enum.Enum):
    PLUS_DELTA = "+Δ"
    MINUS_DELTA = "−Δ"
    PLUS_PARTIAL = "+∂"
    MINUS_PARTIAL = "−∂"

    @classmethod
    def parse(cls, tag: Union["ProofTag", str]) -> "ProofTag":
        if isinstance(tag, ProofTag):
            return tag
        t = tag.strip().replace("-", "−").replace("D", "Δ").replace("d", "∂")
        for member in cls:
            if member.value == t:
                return member
        raise ValueError(f"unknown proof tag {tag!r}")

    @property
    def opposite(self) -> "ProofTag":
        return {
            ProofTag.PLUS_DELTA: ProofTag.MINUS_DELTA,
            ProofTag.MINUS_DELTA: ProofTag.PLUS_DELTA,
            ProofTag.PLUS_PARTIAL: ProofTag.MINUS_PARTIAL,
            ProofTag.MINUS_PARTIAL: ProofTag.PLUS_PARTIAL,
        }[self]


@dataclass(frozen=True)
class DefeasibleTheory:
    facts: tuple = ()
    strict: tuple = ()
    defeasible: tuple = ()
    defeaters: tuple = ()
    superiority: frozenset = frozenset()  # (winner label, loser label)
    # Optional KB evaluating the "base" predicates the theory does not define.
    base: Optional[KnowledgeBase] = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "superiority", frozenset(self.superiority))
        for f in self.facts:
            if f.naf or not is_ground(f.atom):
                raise TheoryError(f"facts must be ground literals, got {format_literal(f)}")
        labels: set = set()
        for r in self.rules:
            if r.label is None:
                continue
            if r.label in labels:
                raise TheoryError(f"duplicate rule label {r.label!r}")
            labels.add(r.label)
        for w, l in self.superiority:
            for lab in (w, l):
                if lab not in labels:
                    raise TheoryError(f"unknown label {lab!r} in superiority ({w} > {l})")
        _check_acyclic(self.superiority)

    @property
    def rules(self) -> tuple:
        return tuple(self.strict) + tuple(self.defeasible) + tuple(self.defeaters)

    @classmethod
    def from_rules(cls, rules: Iterable[Rule], facts: Iterable[Literal] = (), superiority=()) -> "DefeasibleTheory":
        rules = list(rules)
        # unlabeled bodiless strict rules are plain facts; labeled ones stay rules
        # so superiority pairs can still name them
        as_fact = [r for r in rules if r.kind == "strict" and not r.body and r.label is None]
        strict = [r for r in rules if r.kind == "strict" and r not in as_fact]
        facts = list(facts) + [r.head for r in as_fact]
        return cls(
            facts=tuple(facts),
            strict=tuple(strict),
            defeasible=tuple(r for r in rules if r.kind == "defeasible"),
            defeaters=tuple(r for r in rules if r.kind == "defeater"),
            superiority=frozenset(superiority),
        )

    @classmethod
    def from_module(cls, module: RuleModule) -> "DefeasibleTheory":
        return cls.from_rules(module.rules, module.facts, module.priorities)


def _check_acyclic(pairs: frozenset) -> None:
    succ: dict = {}
    for w, l in pairs:
        succ.setdefault(w, set()).add(l)
    state: dict = {}
    for start in sorted(succ):
        if state.get(start):
            continue
        stack = [(start, iter(sorted(succ.get(start, ()))))]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state.get(nxt) == 1:
                raise TheoryError(f"superiority relation is cyclic (through {nxt!r})")
            elif not state.get(nxt):
                state[nxt] = 1
                stack.append((nxt, iter(sorted(succ.get(nxt, ())))))


# ---------------------------------------------------------------------------
# grounding


@dataclass(frozen=True)
class GroundRule:
    id: int
    label: Optional[str]
    kind: str
    head: Literal
    body: tuple


@dataclass(frozen=True)
class GroundTheory:
    rules: tuple  # facts appear as strict rules with empty bodies
    superiority: frozenset

    @cached_property
    def literals(self) -> frozenset:
        out = set()
        for r in self.rules:
            out.add(r.head)
            out.add(r.head.complement())
            for b in r.body:
                out.add(b)
                out.add(b.complement())
        return frozenset(out)

    def beats(self, r: GroundRule, s: GroundRule) -> bool:
        return r.label is not None and s.label is not None and (r.label, s.label) in self.superiority


def _registry(kb: Optional[KnowledgeBase]):
    global _DEFAULT_REGISTRY
    if kb is not None:
        return kb.attachments
    if _DEFAULT_REGISTRY is None:
        _DEFAULT_REGISTRY = KnowledgeBase().attachments
    return _DEFAULT_REGISTRY


_DEFAULT_REGISTRY = None


def _is_builtin(kb: Optional[KnowledgeBase], lit: Literal) -> bool:
    if lit.neg:
        return False
    a = lit.atom
    if a.functor == "=" and len(a.args) == 2:
        return True
    return _registry(kb).get(a.functor, len(a.args)) is not None


def theory_predicates(theory: DefeasibleTheory) -> set:
    """(functor, arity) pairs the theory itself reasons about."""
    keys = set()
    for r in theory.rules:
        keys.add(r.head.atom.key)
    for f in theory.facts:
        keys.add(f.atom.key)
    if theory.base is None:
        for r in theory.rules:
            for b in r.body:
                if not _is_builtin(None, b):
                    keys.add(b.atom.key)
    return keys


def ground(theory: DefeasibleTheory, bound: int = DEFAULT_GROUNDING_BOUND) -> GroundTheory:
    """Instantiate every rule over the theory's constants.

    Body literals over predicates the theory does not define are evaluated
    against ``theory.base`` (True answers of the well-founded model) and
    dropped from the ground body; builtins are evaluated once ground.
    """
    cached = theory.__dict__.get("_ground")
    if cached is not None and cached[0] == bound:
        return cached[1]
    kb = theory.base
    preds = theory_predicates(theory)
    universe = _universe(theory)
    types = kb.types if kb is not None else UNTYPED
    out: list = []
    budget = [bound]
    for f in sorted(set(theory.facts), key=lambda l: (term_order(l.atom), l.neg)):
        out.append(GroundRule(len(out), None, "strict", f, ()))
    for rule in theory.rules:
        for head, body in _instances(rule, preds, universe, kb, types, budget):
            out.append(GroundRule(len(out), rule.label, rule.kind, head, body))
    gt = GroundTheory(tuple(out), theory.superiority)
    object.__setattr__(theory, "_ground", (bound, gt))
    return gt


def _universe(theory: DefeasibleTheory) -> list:
    consts: set = set()
    for r in theory.rules:
        for lit in (r.head,) + tuple(r.body):
            constants(lit.atom, consts)
    for f in theory.facts:
        constants(f.atom, consts)
    if theory.base is not None:
        for f in theory.base.all_facts():
            constants(f.atom, consts)
    return sorted(consts, key=term_order)


def _instances(rule: Rule, preds: set, universe: list, kb, types, budget: list):
    body = tuple(rule.body)
    local = [b for b in body if b.atom.key in preds and not _is_builtin(kb, b)]
    for b in local:
        if b.naf:
            raise TheoryError(f"default negation over theory literal '{format_literal(b)}' is not supported")
    base_pos = [b for b in body if b not in local and not b.naf and not _is_builtin(kb, b)]
    rest = [b for b in body if b not in local and b not in base_pos]
    if base_pos and kb is None:
        raise TheoryError("theory refers to base predicates but has no base KB")
    if base_pos:
        from .solver import TRUE, Solver

        seeds = [dict(a.bindings) for a in Solver(kb).solve(base_pos) if a.truth is TRUE]
    else:
        seeds = [{}]
    enum_vars = list(literal_vars(local).values())
    seen = set()
    for seed in seeds:
        free = [v for v in enum_vars if v.name not in seed]
        for combo in itertools.product(universe, repeat=len(free)):
            budget[0] -= 1
            if budget[0] < 0:
                raise ResourceError("defeasible grounding bound exceeded")
            s = dict(seed)
            if not all(unify_into(v, c, s, types) for v, c in zip(free, combo)):
                continue
            for s2 in _solve_rest(rest, s, kb, types, universe, budget):
                head_vars = [v for v in term_vars(rule.head.atom).values() if v.name not in s2]
                for hcombo in itertools.product(universe, repeat=len(head_vars)):
                    s3 = dict(s2)
                    if not all(unify_into(v, c, s3, types) for v, c in zip(head_vars, hcombo)):
                        continue
                    head = Literal(resolve(rule.head.atom, s3), rule.head.neg)
                    gbody = tuple(Literal(resolve(b.atom, s3), b.neg) for b in local)
                    key = (head, gbody)
                    if key not in seen:
                        seen.add(key)
                        yield head, gbody


def _solve_rest(lits: list, s: dict, kb, types, universe, budget):
    """Evaluate builtins and default-negated base literals once they are ready."""
    if not lits:
        yield s
        return
    for i, lit in enumerate(lits):
        a = resolve(lit.atom, s)
        if a.functor == "=" and len(a.args) == 2 and not lit.neg:
            s2 = dict(s)
            ok = unify_into(a.args[0], a.args[1], s2, types)
            if lit.naf:
                if not is_ground(a):
                    continue
                if not ok:
                    yield from _solve_rest(lits[:i] + lits[i + 1 :], s, kb, types, universe, budget)
                return
            if ok:
                yield from _solve_rest(lits[:i] + lits[i + 1 :], s2, kb, types, universe, budget)
            return
        att = None if lit.neg else _registry(kb).get(a.functor, len(a.args))
        if att is not None:
            if not all(is_ground(x) for x, m in zip(a.args, att.modes) if m == "in"):
                continue
            rows = att.call(a.args)
            outs = [j for j, m in enumerate(att.modes) if m == "out"]
            if lit.naf:
                if not is_ground(a):
                    continue
                if not any(all(a.args[j] == row[k] for k, j in enumerate(outs)) for row in rows):
                    yield from _solve_rest(lits[:i] + lits[i + 1 :], s, kb, types, universe, budget)
                return
            for row in rows:
                s2 = dict(s)
                if all(unify_into(a.args[j], row[k], s2, types) for k, j in enumerate(outs)):
                    yield from _solve_rest(lits[:i] + lits[i + 1 :], s2, kb, types, universe, budget)
            return
        if lit.naf and is_ground(a):
            from .solver import FALSE, Solver

            if Solver(kb).truth_of(Literal(a, lit.neg)) is FALSE:
                yield from _solve_rest(lits[:i] + lits[i + 1 :], s, kb, types, universe, budget)
            return
    # nothing ready: enumerate one variable over the universe
    v = next(iter(literal_vars([Literal(resolve(l.atom, s)) for l in lits]).values()))
    for c in universe:
        budget[0] -= 1
        if budget[0] < 0:
            raise ResourceError("defeasible grounding bound exceeded")
        s2 = dict(s)
        if unify_into(v, c, s2, types):
            yield from _solve_rest(lits, s2, kb, types, universe, budget)


# ---------------------------------------------------------------------------
# direct evaluation of the proof conditions


@dataclass(frozen=True)
class Conclusions:
    plus_delta: frozenset
    minus_delta: frozenset
    plus_partial: frozenset
    minus_partial: frozenset

    def tagged(self, tag: ProofTag) -> frozenset:
        return {
            ProofTag.PLUS_DELTA: self.plus_delta,
            ProofTag.MINUS_DELTA: self.minus_delta,
            ProofTag.PLUS_PARTIAL: self.plus_partial,
            ProofTag.MINUS_PARTIAL: self.minus_partial,
        }[tag]


def conclusions(theory: Union[DefeasibleTheory, GroundTheory]) -> Conclusions:
    gt = theory if isinstance(theory, GroundTheory) else ground(theory)
    cached = gt.__dict__.get("_conclusions")
    if cached is not None:
        return cached
    lits = gt.literals
    strict_for: dict = {}
    sd_for: dict = {}
    all_for: dict = {}
    for r in gt.rules:
        all_for.setdefault(r.head, []).append(r)
        if r.kind != "defeater":
            sd_for.setdefault(r.head, []).append(r)
        if r.kind == "strict":
            strict_for.setdefault(r.head, []).append(r)

    pd, md, pp, mp = set(), set(), set(), set()

    # definite layer first: it does not depend on the defeasible one
    changed = True
    while changed:
        changed = False
        for q in lits:
            if q not in pd and any(all(b in pd for b in r.body) for r in strict_for.get(q, ())):
                pd.add(q)
                changed = True
            if q not in md and all(any(b in md for b in r.body) for r in strict_for.get(q, ())):
                md.add(q)
                changed = True

    changed = True
    while changed:
        changed = False
        for q in lits:
            nq = q.complement()
            attackers = all_for.get(nq, ())
            if q not in pp:
                ok = q in pd
                if not ok and nq in md:
                    for r in sd_for.get(q, ()):
                        if all(b in pp for b in r.body) and all(
                            any(b in mp for b in s.body) or gt.beats(r, s) for s in attackers
                        ):
                            ok = True
                            break
                if ok:
                    pp.add(q)
                    changed = True
            if q not in mp and q in md:
                ok = nq in pd or all(
                    any(b in mp for b in r.body)
                    or any(all(b in pp for b in s.body) and not gt.beats(r, s) for s in attackers)
                    for r in sd_for.get(q, ())
                )
                if ok:
                    mp.add(q)
                    changed = True
    out = Conclusions(frozenset(pd), frozenset(md), frozenset(pp), frozenset(mp))
    object.__setattr__(gt, "_conclusions", out)
    return out


def prove(theory: Union[DefeasibleTheory, GroundTheory], literal: Literal, tag) -> str:
    """``"yes"`` if ``tag`` is derivable for ``literal``, ``"no"`` if the opposite
    tag is, ``"not-derivable"`` if neither (e.g. a positive loop)."""
    if literal.naf or not is_ground(literal.atom):
        raise TheoryError(f"prove needs a ground literal without default negation, got {format_literal(literal)}")
    tag = ProofTag.parse(tag)
    c = conclusions(theory)
    gt = theory if isinstance(theory, GroundTheory) else ground(theory)
    if literal not in gt.literals:
        # no rule mentions it: every minus condition holds vacuously
        return "yes" if tag in (ProofTag.MINUS_DELTA, ProofTag.MINUS_PARTIAL) else "no"
    if literal in c.tagged(tag):
        return "yes"
    if literal in c.tagged(tag.opposite):
        return "no"
    return "not-derivable"


# ---------------------------------------------------------------------------
# compilation to the core language

DEFINITELY = "definitely"
NOT_DEFINITELY = "not_definitely"
DEFEASIBLY = "defeasibly"
NOT_DEFEASIBLY = "not_defeasibly"
_APPLICABLE = "dl_applicable"
_DISCARDED = "dl_discarded"
_BLOCKED = "dl_blocked"
_SFAILED = "dl_strict_failed"


def _pos(functor: str, *args) -> Literal:
    return Literal(Compound(functor, tuple(args)))


def compile(theory: Union[DefeasibleTheory, GroundTheory], module_id: str = "defeasible") -> RuleModule:  # noqa: A001
    """Ground, negation-free meta-program encoding the four proof conditions."""
    gt = theory if isinstance(theory, GroundTheory) else ground(theory)
    lits = sorted(gt.literals, key=lambda l: (term_order(l.atom), l.neg))
    rid = {r.id: Const(r.id, "int") for r in gt.rules}
    strict_for: dict = {}
    sd_for: dict = {}
    all_for: dict = {}
    for r in gt.rules:
        all_for.setdefault(r.head, []).append(r)
        if r.kind != "defeater":
            sd_for.setdefault(r.head, []).append(r)
        if r.kind == "strict":
            strict_for.setdefault(r.head, []).append(r)

    rules: list = []
    facts: list = []

    def emit(head: Literal, body: list):
        if body:
            rules.append(Rule(head, tuple(body)))
        else:
            facts.append(head)

    for r in gt.rules:
        i = rid[r.id]
        emit(_pos(_APPLICABLE, i), [_pos(DEFEASIBLY, literal_to_term(b)) for b in r.body])
        for b in r.body:
            emit(_pos(_DISCARDED, i), [_pos(NOT_DEFEASIBLY, literal_to_term(b))])
            if r.kind == "strict":
                emit(_pos(_SFAILED, i), [_pos(NOT_DEFINITELY, literal_to_term(b))])

    for q in lits:
        t = literal_to_term(q)
        nt = literal_to_term(q.complement())
        for r in strict_for.get(q, ()):
            emit(_pos(DEFINITELY, t), [_pos(DEFINITELY, literal_to_term(b)) for b in r.body])
        if not any(not r.body for r in strict_for.get(q, ())):
            emit(_pos(NOT_DEFINITELY, t), [_pos(_SFAILED, rid[r.id]) for r in strict_for.get(q, ())])

        rules.append(Rule(_pos(DEFEASIBLY, t), (_pos(DEFINITELY, t),)))
        attackers = all_for.get(q.complement(), ())
        for r in sd_for.get(q, ()):
            body = [_pos(NOT_DEFINITELY, nt), _pos(_APPLICABLE, rid[r.id])]
            body += [_pos(_DISCARDED, rid[s.id]) for s in attackers if not gt.beats(r, s)]
            rules.append(Rule(_pos(DEFEASIBLY, t), tuple(body)))

        rules.append(Rule(_pos(NOT_DEFEASIBLY, t), (_pos(NOT_DEFINITELY, t), _pos(DEFINITELY, nt))))
        blockers = [_pos(_BLOCKED, rid[r.id]) for r in sd_for.get(q, ())]
        rules.append(Rule(_pos(NOT_DEFEASIBLY, t), tuple([_pos(NOT_DEFINITELY, t)] + blockers)))
        for r in sd_for.get(q, ()):
            rules.append(Rule(_pos(_BLOCKED, rid[r.id]), (_pos(_DISCARDED, rid[r.id]),)))
            for s in attackers:
                if not gt.beats(r, s):
                    rules.append(Rule(_pos(_BLOCKED, rid[r.id]), (_pos(_APPLICABLE, rid[s.id]),)))
    # dedupe, keeping first-seen order for readable listings
    rules = list(dict.fromkeys(rules))
    facts = list(dict.fromkeys(facts))
    return RuleModule(module_id, rules=tuple(rules), facts=tuple(facts))


# ---------------------------------------------------------------------------
# hybrid: defeasible rules living inside a KB


def theory_from_kb(kb: KnowledgeBase) -> DefeasibleTheory:
    """The defeasible part of ``kb``.

    It holds every defeasible rule and defeater plus the strict rules and
    facts whose predicates depend on them.  All other predicates are "base":
    the core solver decides them.
    """
    rules = kb.all_rules()
    facts = kb.all_facts()
    preds = {r.head.atom.key for r in rules if r.kind != "strict"}
    changed = True
    while changed:
        changed = False
        for r in rules:
            if r.kind == "strict" and r.head.atom.key not in preds:
                if any(b.atom.key in preds for b in r.body):
                    preds.add(r.head.atom.key)
                    changed = True
    # strict rules defining a theory predicate join the theory
    th_rules = [r for r in rules if r.head.atom.key in preds]
    th_facts = [f for f in facts if f.atom.key in preds]
    labels = {r.label for r in th_rules if r.label}
    sup = {(w, l) for w, l in kb.priorities if w in labels and l in labels}
    t = DefeasibleTheory.from_rules(th_rules, th_facts, sup)
    return DefeasibleTheory(t.facts, t.strict, t.defeasible, t.defeaters, t.superiority, base=kb)
