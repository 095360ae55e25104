"""Terms, literals and rules of the logic language, plus (typed) unification.

Terms are immutable values.  Substitutions are plain dicts mapping variable
names to terms; the internal solver works on triangular substitutions while
the public :func:`unify` returns an idempotent one.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Protocol, Union

ROOT_TYPE = "thing"

_IDENT = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    type: Optional[str] = None  # None means the root type

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be nonempty")

    @property
    def tag(self) -> str:
        return self.type or ROOT_TYPE


@dataclass(frozen=True, slots=True)
class Const:
    value: Union[int, float, str]
    kind: str = "sym"  # sym | int | dec | str


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple = ()
    _hash: Optional[int] = field(default=None, init=False, repr=False, compare=False)

    def __hash__(self) -> int:
        # terms are hashed constantly as table and index keys; cache it
        h = self._hash
        if h is None:
            h = hash((self.functor, self.args))
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if other.__class__ is not Compound:
            return NotImplemented
        return self.functor == other.functor and self.args == other.args

    def __reduce__(self):
        return (Compound, (self.functor, self.args))  # the cached hash is per process

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> tuple[str, int]:
        return (self.functor, len(self.args))


Term = Union[Var, Const, Compound]


def sym(name: str) -> Const:
    return Const(name, "sym")


def text(value: str) -> Const:
    return Const(value, "str")


def num(value: Union[int, float]) -> Const:
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        if not -(2**63) <= value < 2**63:
            raise OverflowError(f"integer {value} exceeds 64 bits")
        return Const(value, "int")
    return Const(float(value), "dec")


def to_term(value) -> Term:
    """Convert a plain Python value into a term (strings become symbols)."""
    if isinstance(value, (Var, Const, Compound)):
        return value
    if isinstance(value, bool):
        return sym("true" if value else "false")
    if isinstance(value, (int, float)):
        return num(value)
    if isinstance(value, str):
        return sym(value)
    raise TypeError(f"cannot convert {value!r} to a term")


def atom(functor: str, *args) -> Compound:
    return Compound(functor, tuple(to_term(a) for a in args))


def py_value(term: Term):
    """Inverse of :func:`to_term` for constants; compounds are returned as-is."""
    if isinstance(term, Const):
        return term.value
    return term


@dataclass(frozen=True, slots=True)
class Literal:
    atom: Compound
    neg: bool = False  # explicit negation
    naf: bool = False  # default negation (may wrap a neg literal)

    @property
    def key(self) -> tuple[str, int, bool]:
        return (self.atom.functor, len(self.atom.args), self.neg)

    def positive(self) -> "Literal":
        """The literal with default negation stripped."""
        return Literal(self.atom, self.neg, False) if self.naf else self

    def complement(self) -> "Literal":
        """Complementary literal w.r.t. explicit negation (p vs neg p)."""
        return Literal(self.atom, not self.neg, self.naf)


RULE_KINDS = ("strict", "defeasible", "defeater")


@dataclass(frozen=True, slots=True)
class Rule:
    head: Literal
    body: tuple = ()
    kind: str = "strict"
    label: Optional[str] = None

    def __post_init__(self):
        if self.head.naf:
            raise ValueError("rule heads cannot carry default negation")
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")


@dataclass(frozen=True, slots=True)
class IntegrityConstraint:
    body: tuple

    def __post_init__(self):
        if not self.body:
            raise ValueError("integrity constraint body must be nonempty")


# ---------------------------------------------------------------------------
# traversal helpers


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Const):
        return True
    stack = list(t.args)
    while stack:
        a = stack.pop()
        if isinstance(a, Var):
            return False
        if isinstance(a, Compound):
            stack.extend(a.args)
    return True


def term_vars(t: Term, acc: Optional[dict] = None) -> dict:
    """Variables of ``t`` in order of first occurrence (name -> Var)."""
    if acc is None:
        acc = {}
    if isinstance(t, Var):
        acc.setdefault(t.name, t)
    elif isinstance(t, Compound):
        for a in t.args:
            term_vars(a, acc)
    return acc


def literal_vars(lits: Iterable[Literal], acc: Optional[dict] = None) -> dict:
    if acc is None:
        acc = {}
    for lit in lits:
        term_vars(lit.atom, acc)
    return acc


def term_depth(t: Term) -> int:
    if isinstance(t, Compound) and t.args:
        return 1 + max(term_depth(a) for a in t.args)
    return 0


def constants(t: Term, acc: Optional[set] = None) -> set:
    if acc is None:
        acc = set()
    if isinstance(t, Const):
        acc.add(t)
    elif isinstance(t, Compound):
        for a in t.args:
            constants(a, acc)
    return acc


# ---------------------------------------------------------------------------
# substitutions


def walk(t: Term, s: Mapping[str, Term]) -> Term:
    while isinstance(t, Var):
        nxt = s.get(t.name)
        if nxt is None:
            return t
        t = nxt
    return t


def resolve(t: Term, s: Mapping[str, Term]) -> Term:
    """Apply a (possibly triangular) substitution completely."""
    if isinstance(t, Var):
        t = walk(t, s)
    if not isinstance(t, Compound) or not t.args or not s:
        return t
    changed = False
    out = []
    for a in t.args:
        if isinstance(a, Const):
            out.append(a)
            continue
        r = resolve(a, s)
        changed = changed or r is not a
        out.append(r)
    return Compound(t.functor, tuple(out)) if changed else t


def resolve_literal(lit: Literal, s: Mapping[str, Term]) -> Literal:
    return Literal(resolve(lit.atom, s), lit.neg, lit.naf)


class TypeContext(Protocol):
    def subtype_of(self, sub: str, sup: str) -> bool: ...

    def type_of(self, t: Term) -> str: ...

    def meet(self, a: str, b: str) -> Optional[str]: ...


class _Untyped:
    """Type context with nothing but the root type."""

    def subtype_of(self, sub: str, sup: str) -> bool:
        return sub == sup or sup == ROOT_TYPE

    def type_of(self, t: Term) -> str:
        return ROOT_TYPE

    def meet(self, a: str, b: str) -> Optional[str]:
        if self.subtype_of(a, b):
            return a
        if self.subtype_of(b, a):
            return b
        return None


UNTYPED = _Untyped()

_fresh_types = itertools.count()


def _occurs(name: str, t: Term, s: Mapping[str, Term]) -> bool:
    stack = [t]
    while stack:
        x = walk(stack.pop(), s)
        if isinstance(x, Var):
            if x.name == name:
                return True
        elif isinstance(x, Compound):
            stack.extend(x.args)
    return False


def _bind(v: Var, t: Term, s: dict, types: TypeContext, occurs_check: bool) -> bool:
    if isinstance(t, Var):
        a, b = v.tag, t.tag
        if types.subtype_of(b, a):
            s[v.name] = t
        elif types.subtype_of(a, b):
            s[t.name] = v
        else:
            m = types.meet(a, b)
            if m is None:
                return False
            z = Var(f"_T{next(_fresh_types)}", m)
            s[v.name] = z
            s[t.name] = z
        return True
    if v.type is not None and v.type != ROOT_TYPE:
        if not types.subtype_of(types.type_of(t), v.type):
            return False
    if occurs_check and isinstance(t, Compound) and _occurs(v.name, t, s):
        return False
    s[v.name] = t
    return True


def unify_into(a: Term, b: Term, s: dict, types: TypeContext = UNTYPED, occurs_check: bool = True) -> bool:
    """Extend the triangular substitution ``s`` in place; False on failure.

    On failure ``s`` may hold partial bindings, so callers pass a copy.
    """
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = walk(x, s)
        y = walk(y, s)
        if x is y:
            continue
        if isinstance(x, Var):
            if isinstance(y, Var) and x.name == y.name:
                continue
            if not _bind(x, y, s, types, occurs_check):
                return False
        elif isinstance(y, Var):
            if not _bind(y, x, s, types, occurs_check):
                return False
        elif isinstance(x, Const):
            if not (isinstance(y, Const) and x.kind == y.kind and x.value == y.value):
                return False
        else:
            if not (isinstance(y, Compound) and x.functor == y.functor and len(x.args) == len(y.args)):
                return False
            stack.extend(zip(x.args, y.args))
    return True


def unify(
    t1: Term,
    t2: Term,
    bindings: Optional[Mapping[str, Term]] = None,
    types: TypeContext = UNTYPED,
    occurs_check: bool = True,
) -> Optional[dict]:
    """Most general unifier of ``t1`` and ``t2`` extending ``bindings``.

    Returns an idempotent substitution, or None when the terms do not unify.
    Without the occurs check the raw (possibly cyclic) bindings are returned.
    """
    s = dict(bindings or {})
    if not unify_into(t1, t2, s, types, occurs_check):
        return None
    if not occurs_check:
        return s
    return {k: resolve(v, s) for k, v in s.items()}


def match_into(pattern: Term, t: Term, s: dict) -> bool:
    """One-way matching: bind variables of ``pattern`` only (``t`` treated as rigid)."""
    stack = [(pattern, t)]
    while stack:
        p, x = stack.pop()
        if isinstance(p, Var):
            bound = s.get(p.name)
            if bound is None:
                s[p.name] = x
            elif bound != x:
                return False
        elif isinstance(p, Const):
            if not (isinstance(x, Const) and p.kind == x.kind and p.value == x.value):
                return False
        else:
            if not (isinstance(x, Compound) and p.functor == x.functor and len(p.args) == len(x.args)):
                return False
            stack.extend(zip(p.args, x.args))
    return True


class Renamer:
    """Produces fresh variable names; one instance per solve call."""

    def __init__(self, prefix: str = "_G"):
        self._counter = itertools.count()
        self.prefix = prefix

    def fresh_map(self, names: Iterable[Var]) -> dict:
        return {v.name: Var(f"{self.prefix}{next(self._counter)}", v.type) for v in names}

    def rename(self, t: Term, mapping: dict) -> Term:
        if isinstance(t, Var):
            nv = mapping.get(t.name)
            if nv is None:
                nv = mapping[t.name] = Var(f"{self.prefix}{next(self._counter)}", t.type)
            return nv
        if isinstance(t, Compound) and t.args:
            return Compound(t.functor, tuple(self.rename(a, mapping) for a in t.args))
        return t

    def rename_literal(self, lit: Literal, mapping: dict) -> Literal:
        return Literal(self.rename(lit.atom, mapping), lit.neg, lit.naf)


def variant_key(t: Term, numbering: Optional[dict] = None):
    """Hashable key equal for terms that are variants (equal up to renaming)."""
    if is_ground(t):
        return t
    if numbering is None:
        numbering = {}
    return _vkey(t, numbering)


def _vkey(t: Term, numbering: dict):
    if isinstance(t, Var):
        n = numbering.get(t.name)
        if n is None:
            n = numbering[t.name] = len(numbering)
        return ("$V", n, t.tag)
    if isinstance(t, Compound):
        return ("$F", t.functor) + tuple(_vkey(a, numbering) for a in t.args)
    return t


_KIND_RANK = {"int": 0, "dec": 0, "sym": 1, "str": 2}


def term_order(t: Term):
    """Total ordering key: variables < numbers < symbols < strings < compounds."""
    if isinstance(t, Var):
        return (0, t.name)
    if isinstance(t, Const):
        r = _KIND_RANK[t.kind]
        if r == 0:
            v = t.value
            return (1, r, v if not (isinstance(v, float) and math.isnan(v)) else math.inf, t.kind)
        return (1, r, t.value, "")
    return (2, len(t.args), t.functor, tuple(term_order(a) for a in t.args))


# ---------------------------------------------------------------------------
# printing

_INFIX = {"=": "=", "<": "<", "<=": "<=", ">": ">", ">=": ">=", "!=": "!="}


def format_symbol(name: str) -> str:
    if _IDENT.match(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n") + "'"


def format_string(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def format_term(t: Term, typed: bool = False) -> str:
    if isinstance(t, Var):
        if typed and t.type and t.type != ROOT_TYPE:
            return f"{t.name}:{t.type}"
        return t.name
    if isinstance(t, Const):
        if t.kind == "sym":
            return format_symbol(t.value)
        if t.kind == "str":
            return format_string(t.value)
        return repr(t.value)
    if t.functor == "[]":
        return "[" + ", ".join(format_term(a, typed) for a in t.args) + "]"
    if t.functor == "neg" and len(t.args) == 1 and isinstance(t.args[0], Compound):
        return "neg " + format_term(t.args[0], typed)
    if t.functor in _INFIX and len(t.args) == 2:
        return f"{format_term(t.args[0], typed)} {t.functor} {format_term(t.args[1], typed)}"
    if not t.args:
        return format_symbol(t.functor)
    return format_symbol(t.functor) + "(" + ", ".join(format_term(a, typed) for a in t.args) + ")"


def format_literal(lit: Literal, typed: bool = False) -> str:
    s = format_term(lit.atom, typed)
    if lit.neg:
        s = "neg " + s
    if lit.naf:
        s = "not " + s
    return s


def format_rule(rule: Rule) -> str:
    op = {"strict": ":-", "defeasible": ":=", "defeater": ":~"}[rule.kind]
    head = format_literal(rule.head, typed=True)
    prefix = f"{rule.label}: " if rule.label else ""
    if not rule.body:
        if rule.kind == "strict":
            return f"{prefix}{head}."
        return f"{prefix}{head} {op} true."
    body = ", ".join(format_literal(b, typed=True) for b in rule.body)
    return f"{prefix}{head} {op} {body}."


def format_substitution(s: Mapping[str, Term]) -> str:
    if not s:
        return "yes"
    return ", ".join(f"{k} = {format_term(v)}" for k, v in sorted(s.items()))


def literal_to_term(lit: Literal) -> Term:
    """Reify a literal as a term (``neg p`` becomes ``neg(p)``).

    0-ary atoms become symbols, which is how the parser reads them in argument position.
    """
    a = Const(lit.atom.functor, "sym") if not lit.atom.args else lit.atom
    return Compound("neg", (a,)) if lit.neg else a


def term_to_literal(t: Term) -> Literal:
    if isinstance(t, Compound) and t.functor == "neg" and len(t.args) == 1:
        inner = term_to_literal(t.args[0])
        if not inner.neg:
            return Literal(inner.atom, neg=True)
    if isinstance(t, Const) and t.kind == "sym":
        return Literal(Compound(t.value))
    if not isinstance(t, Compound):
        raise TypeError(f"{format_term(t)} is not a literal")
    return Literal(t)


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Compound):
        for a in t.args:
            yield from iter_subterms(a)
