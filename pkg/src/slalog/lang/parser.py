"""Recursive-descent parser for the textual rule language.

Clause forms::

    p(X) :- q(X), not r(X).        strict rule
    r2: flies(X) := bird(X).       labeled defeasible rule
    d1: neg flies(X) :~ hurt(X).   defeater
    overrides(r3, r2).             superiority
    constraint :- q(X), neg q(X).  integrity constraint (denial)
    :- module(id).  :- import("file.ctr").  :- type(gold < customer).

plus ``eca``, ``norm`` and ``test`` blocks of ``key: value;`` fields.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from ..builtins import COMPARISONS
from ..errors import ParseError
from ..kb import RuleModule
from ..model import EXPECT_KEYWORDS, NORM_KINDS, ON_INGEST, EcaRule, Norm, TestCase
from ..terms import (
    ROOT_TYPE,
    Compound,
    Const,
    IntegrityConstraint,
    Literal,
    Rule,
    Term,
    Var,
    num,
    sym,
    text,
)
from .lexer import Token, tokenize

KEYWORDS_BLOCK = ("eca", "norm", "test")
_RULE_OPS = {":-": "strict", ":=": "defeasible", ":~": "defeater"}
_INFIX = ("=", "<", "<=", ">", ">=", "!=")


@dataclass(frozen=True)
class Program:
    """A parsed source: one rule module plus file-level directives."""

    module: RuleModule
    imports: tuple = ()
    tests: tuple = ()
    origin: str = "<string>"

    def __eq__(self, other):
        if not isinstance(other, Program):
            return NotImplemented
        return (self.module, self.imports, self.tests) == (other.module, other.imports, other.tests)

    def __hash__(self):
        return hash((self.module.id, len(self.module.rules)))


class _Parser:
    def __init__(self, tokens: list[Token], origin: str):
        self.toks = tokens
        self.i = 0
        self.origin = origin
        self.scope: dict = {}  # var name -> type within the current clause

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col, self.origin)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def at(self, value: str, kind: str = "PUNCT") -> bool:
        return self.tok.kind == kind and self.tok.value == value

    def expect(self, value: str, kind: str = "PUNCT") -> Token:
        if not self.at(value, kind):
            found = self.tok.value or "end of input"
            raise self.error(f"expected '{value}' but found '{found}'")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> str:
        if self.tok.kind not in ("IDENT", "QATOM"):
            raise self.error(f"expected {what} but found '{self.tok.value or 'end of input'}'")
        return self.advance().value

    # -- terms -------------------------------------------------------------

    def term(self) -> Term:
        t = self.tok
        if t.kind == "VAR":
            self.advance()
            vtype = None
            if self.at(":") and self.peek().kind == "IDENT":
                self.advance()
                vtype = self.advance().value
            return self._var(t, vtype)
        if t.kind == "INT":
            self.advance()
            return self._int(t, int(t.value))
        if t.kind == "DEC":
            self.advance()
            return num(float(t.value))
        if t.kind == "PUNCT" and t.value == "-" and self.peek().kind in ("INT", "DEC"):
            self.advance()
            n = self.advance()
            return self._int(n, -int(n.value)) if n.kind == "INT" else num(-float(n.value))
        if t.kind == "STRING":
            self.advance()
            return text(t.value)
        if t.kind == "PUNCT" and t.value == "[":
            self.advance()
            items = []
            if not self.at("]"):
                items.append(self.expr())
                while self.at(","):
                    self.advance()
                    items.append(self.expr())
            self.expect("]")
            return Compound("[]", tuple(items))
        if t.kind == "IDENT" and t.value == "neg" and self.peek().kind in ("IDENT", "QATOM"):
            self.advance()
            inner = self.term()
            if isinstance(inner, Const):
                inner = Compound(inner.value)
            return Compound("neg", (inner,))
        if t.kind in ("IDENT", "QATOM"):
            self.advance()
            if self.at("("):
                self.advance()
                args = [self.expr()]
                while self.at(","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                return Compound(t.value, tuple(args))
            return sym(t.value)
        raise self.error(f"expected a term but found '{t.value or 'end of input'}'")

    def _int(self, tok: Token, value: int) -> Const:
        try:
            return num(value)
        except OverflowError:
            raise self.error(f"integer literal {value} does not fit in 64 bits", tok)

    def _var(self, tok: Token, vtype: Optional[str]) -> Var:
        name = tok.value
        if name == "_":
            # anonymous variables are distinct on every occurrence
            name = f"_Anon{len(self.scope)}_{self.i}"
        known = self.scope.get(name, ...)
        if vtype is not None:
            if known not in (..., None, vtype):
                raise self.error(f"variable {name} declared with conflicting types {known} and {vtype}", tok)
            self.scope[name] = vtype
        elif known is ...:
            self.scope[name] = None
        return Var(name, vtype)

    def expr(self) -> Term:
        left = self.term()
        if self.tok.kind == "PUNCT" and self.tok.value in _INFIX:
            op = self.advance().value
            right = self.term()
            return Compound(COMPARISONS.get(op, op), (left, right))
        return left

    # -- literals ----------------------------------------------------------

    def literal(self) -> Literal:
        start = self.tok
        naf = False
        if self.tok.kind == "IDENT" and self.tok.value == "not" and self.peek().kind in ("IDENT", "VAR", "QATOM", "INT", "DEC", "STRING"):
            self.advance()
            naf = True
        neg = False
        if self.tok.kind == "IDENT" and self.tok.value == "neg" and self.peek().kind in ("IDENT", "QATOM"):
            self.advance()
            neg = True
        t = self.expr()
        if isinstance(t, Const) and t.kind == "sym":
            t = Compound(t.value)
        if not isinstance(t, Compound) or t.functor == "[]":
            raise self.error("expected a literal (an atom, optionally prefixed by 'not' or 'neg')", start)
        return Literal(t, neg, naf)

    def body(self) -> tuple:
        if self.at("true", "IDENT") and self.peek().kind == "PUNCT" and self.peek().value in (".", ";", "}"):
            self.advance()
            return ()
        lits = [self.literal()]
        while self.at(","):
            self.advance()
            lits.append(self.literal())
        return tuple(lits)

    def term_list(self) -> tuple:
        items = [self.expr()]
        while self.at(","):
            self.advance()
            items.append(self.expr())
        return tuple(items)

    # -- scoping -----------------------------------------------------------

    def begin_clause(self):
        self.scope = {}

    def finish(self, obj):
        """Propagate each variable's declared type to all of its occurrences."""
        typed = {k: v for k, v in self.scope.items() if v}
        if not typed:
            return obj
        return _retag(obj, typed)

    # -- statements --------------------------------------------------------

    def program(self) -> Program:
        module_id = None
        imports, rules, facts, prios, cons, tax, ecas, norms, tests = [], [], [], [], [], [], [], [], []
        labels: set = set()
        block_ids: dict = {"eca": set(), "norm": set(), "test": set()}
        while self.tok.kind != "EOF":
            self.begin_clause()
            start = self.tok
            if self.at(":-"):
                self.advance()
                kind, value = self.directive()
                if kind == "module":
                    if module_id is not None:
                        raise self.error("module id declared twice", start)
                    module_id = value
                elif kind == "import":
                    imports.append(value)
                else:
                    tax.extend(value)
                self.expect(".")
                continue
            if self.tok.kind == "IDENT" and self.tok.value in KEYWORDS_BLOCK and self.peek().kind in ("IDENT", "QATOM") and self.peek(2).kind == "PUNCT" and self.peek(2).value == "{":
                which = self.advance().value
                ident_tok = self.tok
                ident = self.expect_ident(f"{which} id")
                if ident in block_ids[which]:
                    raise self.error(f"duplicate {which} id {ident!r}", ident_tok)
                block_ids[which].add(ident)
                fields = self.fields(which)
                try:
                    obj = self.finish(_build_block(which, ident, fields))
                except ValueError as exc:
                    raise self.error(str(exc), start)
                {"eca": ecas, "norm": norms, "test": tests}[which].append(obj)
                continue
            if self.at("constraint", "IDENT") and self.peek().kind == "PUNCT" and self.peek().value == ":-":
                self.advance()
                self.advance()
                body = self.body()
                if not body:
                    raise self.error("integrity constraint body must be nonempty", start)
                self.expect(".")
                cons.append(self.finish(IntegrityConstraint(body)))
                continue
            if self.at("overrides", "IDENT") and self.peek().kind == "PUNCT" and self.peek().value == "(":
                self.advance()
                self.expect("(")
                w = self.expect_ident("rule label")
                self.expect(",")
                l = self.expect_ident("rule label")
                self.expect(")")
                self.expect(".")
                prios.append((w, l))
                continue
            label = None
            if self.tok.kind == "IDENT" and self.peek().kind == "PUNCT" and self.peek().value == ":":
                label_tok = self.advance()
                label = label_tok.value
                self.advance()
                if label in labels:
                    raise self.error(f"duplicate rule label {label!r}", label_tok)
                labels.add(label)
            head = self.literal()
            if head.naf:
                raise self.error("rule heads cannot use default negation", start)
            if self.tok.kind == "PUNCT" and self.tok.value in _RULE_OPS:
                kind = _RULE_OPS[self.advance().value]
                body = self.body()
                self.expect(".")
                rules.append(self.finish(Rule(head, body, kind, label)))
            else:
                self.expect(".")
                head = self.finish(head)
                if label is None:
                    facts.append(head)
                else:
                    rules.append(Rule(head, (), "strict", label))
        module = RuleModule(
            module_id or _stem(self.origin),
            tuple(rules),
            tuple(facts),
            tuple(prios),
            tuple(cons),
            tuple(tax),
            tuple(ecas),
            tuple(norms),
        )
        return Program(module, tuple(imports), tuple(tests), self.origin)

    def directive(self):
        tok = self.tok
        name = self.expect_ident("directive")
        self.expect("(")
        if name == "module":
            value = self.expect_ident("module id")
            self.expect(")")
            return "module", value
        if name == "import":
            if self.tok.kind != "STRING":
                raise self.error("import expects a quoted file name")
            value = self.advance().value
            self.expect(")")
            return "import", value
        if name == "type":
            sub = self.expect_ident("type name")
            edges = []
            if self.at("<"):
                while self.at("<"):
                    self.advance()
                    sup = self.expect_ident("type name")
                    edges.append((sub, sup))
                    sub = sup
            else:
                edges.append((sub, ROOT_TYPE))
            self.expect(")")
            if any(a == ROOT_TYPE for a, _ in edges):
                raise self.error("the root type 'thing' cannot be a subtype", tok)
            return "type", [e for e in edges if e[0] != e[1]]
        raise self.error(f"unknown directive '{name}'", tok)

    def fields(self, which: str) -> dict:
        self.expect("{")
        out: dict = {}
        while not self.at("}"):
            key_tok = self.tok
            key = self.expect_ident("field name")
            if key in out:
                raise self.error(f"duplicate field '{key}'", key_tok)
            self.expect(":")
            out[key] = (self.field_value(which, key, key_tok), key_tok)
            if self.at(";"):
                self.advance()
            elif not self.at("}"):
                raise self.error(f"expected ';' or '}}' but found '{self.tok.value or 'end of input'}'")
        self.expect("}")
        return out

    def field_value(self, which: str, key: str, key_tok: Token):
        spec = _FIELDS.get(which, {}).get(key)
        if spec is None:
            raise self.error(f"unknown {which} field '{key}'", key_tok)
        if spec == "body":
            return self.body()
        if spec == "terms":
            return self.term_list()
        if spec == "term":
            return self.expr()
        if spec == "ident":
            return self.expect_ident(key)
        if spec == "string":
            if self.tok.kind != "STRING":
                raise self.error(f"field '{key}' expects a quoted string")
            return self.advance().value
        if spec == "int":
            if self.tok.kind != "INT":
                raise self.error(f"field '{key}' expects an integer")
            return int(self.advance().value)
        if spec == "period":
            if self.at(ON_INGEST, "IDENT"):
                self.advance()
                return ON_INGEST
            if self.tok.kind != "INT":
                raise self.error("'every' expects a period in ms or on_ingest")
            return int(self.advance().value)
        if spec == "deadline":
            if self.at("standing", "IDENT"):
                self.advance()
                return ("standing", None)
            relative = False
            if self.at("+"):
                self.advance()
                relative = True
            if self.tok.kind != "INT":
                raise self.error("deadline expects +N (relative), N (absolute) or standing")
            return ("relative" if relative else "absolute", int(self.advance().value))
        if spec == "expect":
            t = self.expr()
            return t
        raise AssertionError(spec)


_FIELDS = {
    "eca": {"every": "period", "event": "body", "condition": "body", "action": "terms", "else": "terms"},
    "norm": {
        "kind": "ident",
        "bearer": "term",
        "trigger": "term",
        "target": "term",
        "deadline": "deadline",
        "reparation": "ident",
        "breach": "term",
    },
    "test": {"given": "string", "at": "int", "query": "body", "expect": "expect"},
}


def _build_block(which: str, ident: str, fields: dict):
    f = {k: v for k, (v, _) in fields.items()}
    if which == "eca":
        if "action" not in f:
            raise ValueError(f"eca {ident}: missing 'action'")
        return EcaRule(
            ident,
            f.get("every"),
            f.get("event", ()),
            f.get("condition", ()),
            f["action"],
            f.get("else", ()),
        )
    if which == "norm":
        for req in ("kind", "target"):
            if req not in f:
                raise ValueError(f"norm {ident}: missing '{req}'")
        if f["kind"] not in NORM_KINDS:
            raise ValueError(f"norm {ident}: unknown kind {f['kind']!r}")
        dl_kind, dl = f.get("deadline", (None, None))
        return Norm(
            ident,
            f["kind"],
            f["target"],
            bearer=f.get("bearer"),
            trigger=f.get("trigger"),
            deadline=dl,
            relative=dl_kind != "absolute",
            standing=dl_kind == "standing",
            reparation=f.get("reparation"),
            breach=f.get("breach"),
        )
    for req in ("query", "expect"):
        if req not in f:
            raise ValueError(f"test {ident}: missing '{req}'")
    return TestCase(ident, f["query"], expectation_from_term(f["expect"]), f.get("given"), f.get("at"))


def expectation_from_term(t: Term):
    if isinstance(t, Const) and t.kind == "sym" and t.value in EXPECT_KEYWORDS:
        return t.value
    if isinstance(t, Compound) and t.functor == "answers" and len(t.args) == 1:
        lst = t.args[0]
        if isinstance(lst, Compound) and lst.functor == "[]":
            answers = []
            for item in lst.args:
                pairs = item.args if isinstance(item, Compound) and item.functor == "[]" else (item,)
                binding = []
                for p in pairs:
                    if not (isinstance(p, Compound) and p.functor == "=" and isinstance(p.args[0], Var)):
                        raise ValueError("answers(...) items must be 'Var = term' or lists of them")
                    binding.append((p.args[0].name, p.args[1]))
                answers.append(tuple(sorted(binding, key=lambda x: x[0])))
            return ("answers", tuple(answers))
    raise ValueError("expect must be true, false, undefined or answers([...])")


def expectation_to_term(expect) -> Term:
    if isinstance(expect, str):
        return sym(expect)
    items = []
    for binding in expect[1]:
        eqs = tuple(Compound("=", (Var(name), value)) for name, value in binding)
        items.append(eqs[0] if len(eqs) == 1 else Compound("[]", eqs))
    return Compound("answers", (Compound("[]", tuple(items)),))


def _retag(obj, typed: dict):
    if isinstance(obj, Var):
        t = typed.get(obj.name)
        return Var(obj.name, t) if t and obj.type != t else obj
    if isinstance(obj, Compound):
        return Compound(obj.functor, tuple(_retag(a, typed) for a in obj.args)) if obj.args else obj
    if isinstance(obj, Literal):
        return Literal(_retag(obj.atom, typed), obj.neg, obj.naf)
    if isinstance(obj, Rule):
        return Rule(_retag(obj.head, typed), tuple(_retag(b, typed) for b in obj.body), obj.kind, obj.label)
    if isinstance(obj, IntegrityConstraint):
        return IntegrityConstraint(tuple(_retag(b, typed) for b in obj.body))
    if isinstance(obj, tuple):
        return tuple(_retag(x, typed) for x in obj)
    if isinstance(obj, EcaRule):
        return EcaRule(
            obj.id,
            obj.every,
            _retag(obj.event, typed),
            _retag(obj.condition, typed),
            _retag(obj.action, typed),
            _retag(obj.else_action, typed),
        )
    if isinstance(obj, TestCase):
        return TestCase(obj.id, _retag(obj.query, typed), obj.expect, obj.given, obj.at)
    if isinstance(obj, Norm):
        from dataclasses import replace

        return replace(
            obj,
            target=_retag(obj.target, typed),
            trigger=_retag(obj.trigger, typed) if obj.trigger is not None else None,
            bearer=_retag(obj.bearer, typed) if obj.bearer is not None else None,
            breach=_retag(obj.breach, typed) if obj.breach is not None else None,
        )
    return obj


def _stem(origin: str) -> str:
    stem = Path(origin).stem if origin and not origin.startswith("<") else "main"
    return stem or "main"


def _decode(src: Union[str, bytes], origin: str) -> str:
    if isinstance(src, bytes):
        try:
            return src.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8 ({exc.reason})", 1, exc.start + 1, origin)
    return src


def parse_program(src: Union[str, bytes], origin: str = "<string>") -> Program:
    """Parse a complete source file; raises :class:`ParseError` with a location."""
    text_ = _decode(src, origin)
    p = _Parser(tokenize(text_, origin), origin)
    return p.program()


def parse_query(src: str, origin: str = "<query>") -> tuple:
    p = _Parser(tokenize(src, origin), origin)
    body = p.body()
    if p.at("."):
        p.advance()
    if p.tok.kind != "EOF":
        raise p.error(f"unexpected '{p.tok.value}' after query")
    return p.finish(body)


def parse_literal(src: str) -> Literal:
    lits = parse_query(src)
    if len(lits) != 1:
        raise ParseError("expected a single literal", 1, 1, "<literal>")
    return lits[0]


def parse_term(src: str) -> Term:
    p = _Parser(tokenize(src, "<term>"), "<term>")
    t = p.expr()
    if p.tok.kind != "EOF":
        raise p.error(f"unexpected '{p.tok.value}' after term")
    return p.finish(t)
