"""Unitized knowledge base: ID-keyed rule modules, taxonomy, attachments.

A :class:`KnowledgeBase` is an immutable value.  :func:`kb_apply` returns a new
KB, so rolling back a failed transaction simply means keeping the old value,
and readers can hold on to a snapshot while a writer prepares the next one.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Optional, Union

from .errors import (
    AttachmentError,
    InstantiationError,
    KBUpdateError,
    TypeHierarchyError,
    UnknownTypeError,
    UnsafeRuleError,
)
from .terms import (
    ROOT_TYPE,
    Compound,
    Const,
    Literal,
    Rule,
    Term,
    format_literal,
    format_rule,
    format_term,
    is_ground,
    literal_vars,
    py_value,
    term_vars,
    to_term,
)

DYNAMIC_MODULE = "dynamic"


# ---------------------------------------------------------------------------
# taxonomy


@dataclass(frozen=True)
class TypeHierarchy:
    edges: frozenset = frozenset()  # (subtype, supertype)
    extra: frozenset = frozenset()  # types declared without an explicit supertype

    @cached_property
    def declared(self) -> frozenset:
        names = {ROOT_TYPE} | set(self.extra)
        for a, b in self.edges:
            names.add(a)
            names.add(b)
        return frozenset(names)

    @cached_property
    def _supers(self) -> dict:
        out: dict = {t: set() for t in self.declared}
        for a, b in self.edges:
            out[a].add(b)
        return out

    @cached_property
    def ancestors(self) -> dict:
        """Reflexive-transitive supertypes of every declared type (root included)."""
        result = {}
        for t in self.declared:
            seen = {t}
            stack = [t]
            while stack:
                for sup in self._supers[stack.pop()]:
                    if sup not in seen:
                        seen.add(sup)
                        stack.append(sup)
            seen.add(ROOT_TYPE)
            result[t] = frozenset(seen)
        return result

    def validate(self) -> None:
        for a, b in self.edges:
            if a == ROOT_TYPE:
                raise TypeHierarchyError("the root type cannot have a supertype")
        # a cycle shows up as a type that is a strict ancestor of itself
        for t in self.declared:
            for sup in self._supers[t]:
                if t in self.ancestors[sup] and t != ROOT_TYPE:
                    raise TypeHierarchyError(f"type hierarchy is cyclic through {t!r}")

    def subtype_of(self, t1: str, t2: str) -> bool:
        for t in (t1, t2):
            if t not in self.declared:
                raise UnknownTypeError(f"unknown type {t!r}")
        return t2 in self.ancestors[t1]

    def meet(self, a: str, b: str) -> Optional[str]:
        """Most general common subtype of ``a`` and ``b`` if it is unique."""
        if self.subtype_of(a, b):
            return a
        if self.subtype_of(b, a):
            return b
        common = [t for t in self.declared if a in self.ancestors[t] and b in self.ancestors[t]]
        maximal = [t for t in common if not any(u != t and u in self.ancestors[t] for u in common)]
        return maximal[0] if len(maximal) == 1 else None

    def with_edges(self, edges: Iterable[tuple[str, str]]) -> "TypeHierarchy":
        return TypeHierarchy(self.edges | frozenset(edges), self.extra)


def subtype_of(kb: "KnowledgeBase", t1: str, t2: str) -> bool:
    return kb.taxonomy.subtype_of(t1, t2)


class KBTypes:
    """Type context used by typed unification over a KB snapshot."""

    def __init__(self, hierarchy: TypeHierarchy, assertions: dict):
        self.hierarchy = hierarchy
        self.assertions = assertions

    def subtype_of(self, sub: str, sup: str) -> bool:
        if sup == ROOT_TYPE:
            return True
        return self.hierarchy.subtype_of(sub, sup)

    def type_of(self, t: Term) -> str:
        if isinstance(t, Const):
            return self.assertions.get(t, ROOT_TYPE)
        return ROOT_TYPE

    def meet(self, a: str, b: str) -> Optional[str]:
        return self.hierarchy.meet(a, b)


# ---------------------------------------------------------------------------
# attachments

MODES = ("in", "out")


@dataclass(frozen=True)
class Attachment:
    """Externally implemented predicate.

    ``fn`` receives the input-mode arguments as Python values (constants) or
    terms (compounds) and returns either a bool, None, one tuple of output
    values, or an iterable of such tuples.
    """

    name: str
    modes: tuple
    fn: Callable = field(compare=False)
    deterministic: bool = True
    side_effect: bool = False

    def __post_init__(self):
        for m in self.modes:
            if m not in MODES:
                raise AttachmentError(f"bad argument mode {m!r} for {self.name}")

    @property
    def arity(self) -> int:
        return len(self.modes)

    def call(self, args: tuple) -> list[tuple]:
        """Invoke with fully resolved args; returns output-term tuples."""
        inputs = []
        for a, mode in zip(args, self.modes):
            if mode == "in":
                if not is_ground(a):
                    shown = ", ".join(format_term(x) for x in args)
                    raise InstantiationError(
                        f"instantiation error: {self.name}({shown}) needs ground input-mode arguments"
                    )
                inputs.append(py_value(a))
        result = self.fn(*inputs)
        n_out = sum(1 for m in self.modes if m == "out")
        if result is None or result is False:
            return []
        if result is True:
            return [()] if n_out == 0 else []
        if isinstance(result, tuple):
            result = [result]
        elif isinstance(result, (int, float, str, Const, Compound)):
            result = [(result,)]
        out = []
        for row in result:
            if not isinstance(row, tuple):
                row = (row,)
            if len(row) != n_out:
                raise AttachmentError(f"{self.name}/{self.arity} returned {len(row)} outputs, expected {n_out}")
            out.append(tuple(to_term(v) for v in row))
        return out


@dataclass(frozen=True)
class AttachmentRegistry:
    entries: tuple = ()  # ((name, arity), Attachment) pairs, insertion ordered

    @cached_property
    def table(self) -> dict:
        return dict(self.entries)

    def get(self, name: str, arity: int) -> Optional[Attachment]:
        return self.table.get((name, arity))

    def __contains__(self, key) -> bool:
        return key in self.table

    def register(self, att: Attachment) -> "AttachmentRegistry":
        key = (att.name, att.arity)
        if key in self.table:
            raise AttachmentError(f"attachment {att.name}/{att.arity} is already registered")
        return AttachmentRegistry(self.entries + ((key, att),))


# ---------------------------------------------------------------------------
# modules


@dataclass(frozen=True)
class RuleModule:
    id: str
    rules: tuple = ()
    facts: tuple = ()
    priorities: tuple = ()  # (winner label, loser label)
    constraints: tuple = ()
    taxonomy: tuple = ()  # (subtype, supertype)
    eca: tuple = ()
    norms: tuple = ()

    def __post_init__(self):
        seen = set()
        for r in self.rules:
            if r.label is None:
                continue
            if r.label in seen:
                raise KBUpdateError(f"duplicate rule label {r.label!r} in module {self.id!r}")
            seen.add(r.label)

    @property
    def labels(self) -> set:
        return {r.label for r in self.rules if r.label}

    def head_keys(self) -> set:
        keys = {(r.head.atom.functor, len(r.head.atom.args)) for r in self.rules}
        keys |= {(f.atom.functor, len(f.atom.args)) for f in self.facts}
        return keys

    def with_facts(self, facts: Iterable[Literal]) -> "RuleModule":
        return replace(self, facts=tuple(facts))


def check_rule_safety(rule: Rule) -> None:
    """Every variable of a default-negated body literal must also occur in the
    head or in a positive body literal."""
    positive = literal_vars([rule.head])
    literal_vars([b for b in rule.body if not b.naf], positive)
    for b in rule.body:
        if b.naf:
            missing = [v for v in term_vars(b.atom) if v not in positive]
            if missing:
                raise UnsafeRuleError(
                    f"unsafe rule {format_rule(rule)}: variable(s) {', '.join(missing)} "
                    f"of '{format_literal(b)}' do not occur in a positive literal"
                )


def check_query_safety(body: Iterable[Literal]) -> None:
    body = list(body)
    positive = literal_vars([b for b in body if not b.naf])
    for b in body:
        if b.naf:
            missing = [v for v in term_vars(b.atom) if v not in positive]
            if missing:
                raise UnsafeRuleError(
                    f"unsafe query: variable(s) {', '.join(missing)} of '{format_literal(b)}' "
                    "must be bound by a positive literal before default negation can be evaluated"
                )


# ---------------------------------------------------------------------------
# updates


@dataclass(frozen=True)
class AddModule:
    module: RuleModule


@dataclass(frozen=True)
class RemoveModule:
    module_id: str


@dataclass(frozen=True)
class ReplaceModule:
    """Add the module, replacing any existing module with the same id."""

    module: RuleModule


@dataclass(frozen=True)
class AssertFact:
    fact: Literal
    module_id: str = DYNAMIC_MODULE


@dataclass(frozen=True)
class RetractFact:
    fact: Literal
    module_id: str = DYNAMIC_MODULE


Update = Union[AddModule, RemoveModule, ReplaceModule, AssertFact, RetractFact]


@dataclass(frozen=True)
class ChangeSummary:
    added: tuple = ()
    removed: tuple = ()
    asserted: int = 0
    retracted: int = 0
    warnings: tuple = ()


# ---------------------------------------------------------------------------
# knowledge base


def _default_registry() -> AttachmentRegistry:
    from .builtins import default_attachments

    reg = AttachmentRegistry()
    for att in default_attachments():
        reg = reg.register(att)
    return reg


@dataclass(frozen=True)
class KnowledgeBase:
    modules: dict = field(default_factory=dict)  # id -> RuleModule, never mutated
    attachments: AttachmentRegistry = field(default_factory=_default_registry)

    # -- derived views (cached; safe because the KB is immutable) ---------

    @cached_property
    def taxonomy(self) -> TypeHierarchy:
        edges = set()
        for m in self.modules.values():
            edges.update(m.taxonomy)
        return TypeHierarchy(frozenset(edges), frozenset(self.type_assertions.values()))

    @cached_property
    def type_assertions(self) -> dict:
        out = {}
        for m in self.modules.values():
            for f in m.facts:
                a = f.atom
                if a.functor == "type" and len(a.args) == 2 and not f.neg:
                    c, t = a.args
                    if isinstance(c, Const) and isinstance(t, Const) and t.kind == "sym":
                        out[c] = t.value
        return out

    @cached_property
    def types(self) -> KBTypes:
        return KBTypes(self.taxonomy, self.type_assertions)

    @cached_property
    def index(self) -> dict:
        """(functor, arity, neg) -> tuple of strict rules (facts have empty bodies)."""
        idx: dict = {}
        for m in self.modules.values():
            for f in m.facts:
                idx.setdefault(f.key, []).append(Rule(f))
            for r in m.rules:
                if r.kind == "strict":
                    idx.setdefault(r.head.key, []).append(r)
        return {k: tuple(v) for k, v in idx.items()}

    @cached_property
    def labels(self) -> set:
        out = set()
        for m in self.modules.values():
            out |= m.labels
        return out

    @property
    def priorities(self) -> list:
        return [p for m in self.modules.values() for p in m.priorities]

    @property
    def constraints(self) -> list:
        return [c for m in self.modules.values() for c in m.constraints]

    @property
    def eca_rules(self) -> list:
        return [e for m in self.modules.values() for e in m.eca]

    @property
    def norms(self) -> list:
        return [n for m in self.modules.values() for n in m.norms]

    def all_rules(self) -> list:
        return [r for m in self.modules.values() for r in m.rules]

    def all_facts(self) -> list:
        return [f for m in self.modules.values() for f in m.facts]

    @cached_property
    def narrative(self) -> tuple:
        """Ground ``happens(Event, T)`` facts as (time, event) pairs, time ordered."""
        out = []
        seq = 0
        for m in self.modules.values():
            for f in m.facts:
                a = f.atom
                if f.neg or a.functor != "happens" or len(a.args) != 2:
                    continue
                e, t = a.args
                if isinstance(t, Const) and t.kind == "int" and is_ground(e):
                    out.append((t.value, seq, e))
                    seq += 1
        out.sort(key=lambda x: (x[0], x[1]))
        return tuple((t, e) for t, _, e in out)

    def defines(self, functor: str, arity: int) -> bool:
        return any(k[0] == functor and k[1] == arity for k in self.index)

    def module(self, module_id: str) -> RuleModule:
        return self.modules[module_id]

    def __contains__(self, module_id: str) -> bool:
        return module_id in self.modules

    def with_attachment(self, att: Attachment) -> "KnowledgeBase":
        return register_attachment(self, att)


def _validate(kb: KnowledgeBase, touched: Iterable[RuleModule]) -> list[str]:
    warnings = []
    for m in touched:
        for key in m.head_keys():
            if key in kb.attachments:
                raise KBUpdateError(
                    f"module {m.id!r} defines {key[0]}/{key[1]}, which is a registered attachment"
                )
        for r in m.rules:
            check_rule_safety(r)
    kb.taxonomy.validate()
    labels = kb.labels
    for m in kb.modules.values():
        for w, l in m.priorities:
            for lab in (w, l):
                if lab not in labels:
                    warnings.append(f"module {m.id!r}: priority refers to unknown rule label {lab!r}")
    return warnings


def kb_apply(kb: KnowledgeBase, updates: list) -> tuple[KnowledgeBase, ChangeSummary]:
    """Apply ``updates`` atomically, in order.

    Raises :class:`KBUpdateError` (or a subclass-specific error) if any update
    fails; in that case nothing is applied and ``kb`` remains valid.
    """
    if not updates:
        raise KBUpdateError("empty update list")
    modules = dict(kb.modules)
    added, removed, touched = [], [], {}
    asserted = retracted = 0
    for i, u in enumerate(updates):
        if isinstance(u, AddModule):
            if u.module.id in modules:
                raise KBUpdateError(f"update {i}: module {u.module.id!r} already exists")
            modules[u.module.id] = u.module
            touched[u.module.id] = u.module
            added.append(u.module.id)
        elif isinstance(u, ReplaceModule):
            if u.module.id in modules:
                removed.append(u.module.id)
            modules[u.module.id] = u.module
            touched[u.module.id] = u.module
            added.append(u.module.id)
        elif isinstance(u, RemoveModule):
            if u.module_id not in modules:
                raise KBUpdateError(f"update {i}: no module {u.module_id!r} to remove")
            del modules[u.module_id]
            touched.pop(u.module_id, None)
            removed.append(u.module_id)
        elif isinstance(u, AssertFact):
            m = modules.get(u.module_id) or RuleModule(u.module_id)
            if m.id not in modules:
                added.append(m.id)
            m = replace(m, facts=m.facts + (u.fact,))
            modules[m.id] = m
            touched[m.id] = m
            asserted += 1
        elif isinstance(u, RetractFact):
            m = modules.get(u.module_id)
            if m is None or u.fact not in m.facts:
                raise KBUpdateError(f"update {i}: fact {format_literal(u.fact)} not present in module {u.module_id!r}")
            facts = list(m.facts)
            facts.remove(u.fact)
            m = replace(m, facts=tuple(facts))
            modules[m.id] = m
            touched[m.id] = m
            retracted += 1
        else:
            raise KBUpdateError(f"update {i}: unknown update {u!r}")
    new = KnowledgeBase(modules, kb.attachments)
    warnings = _validate(new, touched.values())
    return new, ChangeSummary(tuple(added), tuple(removed), asserted, retracted, tuple(warnings))


def register_attachment(
    kb: KnowledgeBase,
    att_or_name: Union[Attachment, str],
    arity: Optional[int] = None,
    fn: Optional[Callable] = None,
    modes: Optional[tuple] = None,
    deterministic: bool = True,
    side_effect: bool = False,
) -> KnowledgeBase:
    if isinstance(att_or_name, Attachment):
        att = att_or_name
    else:
        if modes is None:
            modes = ("in",) * (arity or 0)
        if arity is not None and len(modes) != arity:
            raise AttachmentError("arity does not match the number of modes")
        att = Attachment(att_or_name, tuple(modes), fn, deterministic, side_effect)
    for m in kb.modules.values():
        if (att.name, att.arity) in m.head_keys():
            raise AttachmentError(
                f"{att.name}/{att.arity} is defined by rules in module {m.id!r}; cannot register an attachment"
            )
    return KnowledgeBase(kb.modules, kb.attachments.register(att))


def kb_from_modules(*modules: RuleModule, kb: Optional[KnowledgeBase] = None) -> KnowledgeBase:
    kb = kb or KnowledgeBase()
    if not modules:
        return kb
    new, _ = kb_apply(kb, [AddModule(m) for m in modules])
    return new
