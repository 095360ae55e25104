"""RuleML-style XML serialization (``<rbsla>`` documents).

Element vocabulary: rbsla, module, rule(kind,label), head, body, atom, rel,
var(type), ind(type), data, neg, naf, overrides(winner,loser), constraint,
taxonomy, subclassOf(sub,super), eca(id,every), event, condition, action,
else, norm(kind,id), test(id,expect).

Compound terms nest as ``<atom>`` elements; norm and test fields are encoded
as ``<atom>`` children whose ``<rel>`` names the field.
"""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from typing import Optional, Union

from ..errors import SchemaError
from ..kb import RuleModule
from ..model import EXPECT_KEYWORDS, NORM_KINDS, ON_INGEST, EcaRule, Norm, TestCase
from ..terms import (
    RULE_KINDS,
    Compound,
    Const,
    IntegrityConstraint,
    Literal,
    Rule,
    Term,
    Var,
    format_string,
    num,
    sym,
    text,
)
from .parser import Program, expectation_from_term, expectation_to_term

_INT = re.compile(r"[+-]?\d+\Z")
_DEC = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\Z|[+-]?(inf|nan)\Z")
_NORM_FIELDS = ("bearer", "trigger", "target", "deadline", "reparation", "breach")


# ---------------------------------------------------------------------------
# emit


def _data_text(c: Const) -> str:
    if c.kind == "str":
        return format_string(c.value)
    return repr(c.value)


def _term_el(t: Term) -> ET.Element:
    if isinstance(t, Var):
        el = ET.Element("var")
        if t.type:
            el.set("type", t.type)
        el.text = t.name
        return el
    if isinstance(t, Const):
        if t.kind == "sym":
            el = ET.Element("ind")
            el.text = t.value
        else:
            el = ET.Element("data")
            el.text = _data_text(t)
        return el
    return _atom_el(t)


def _atom_el(a: Compound) -> ET.Element:
    el = ET.Element("atom")
    rel = ET.SubElement(el, "rel")
    rel.text = a.functor
    for x in a.args:
        el.append(_term_el(x))
    return el


def _literal_el(lit: Literal) -> ET.Element:
    el = _atom_el(lit.atom)
    if lit.neg:
        wrap = ET.Element("neg")
        wrap.append(el)
        el = wrap
    if lit.naf:
        wrap = ET.Element("naf")
        wrap.append(el)
        el = wrap
    return el


def _field_el(name: str, value: Term) -> ET.Element:
    el = ET.Element("atom")
    ET.SubElement(el, "rel").text = name
    el.append(_term_el(value))
    return el


def _container(tag: str, lits) -> ET.Element:
    el = ET.Element(tag)
    for lit in lits:
        el.append(_literal_el(lit))
    return el


def _terms_container(tag: str, terms) -> ET.Element:
    el = ET.Element(tag)
    for t in terms:
        el.append(_term_el(t))
    return el


def emit_rbsla(program: Union[Program, RuleModule]) -> str:
    """Serialize a program (or a bare module) as an rbsla XML document."""
    if isinstance(program, RuleModule):
        program = Program(program)
    m = program.module
    root = ET.Element("rbsla", {"id": m.id})
    for imp in program.imports:
        ET.SubElement(root, "module").text = imp
    if m.taxonomy:
        tax = ET.SubElement(root, "taxonomy")
        for sub, sup in m.taxonomy:
            ET.SubElement(tax, "subclassOf", {"sub": sub, "super": sup})
    for f in m.facts:
        root.append(_literal_el(f))
    for r in m.rules:
        attrs = {"kind": r.kind}
        if r.label is not None:
            attrs["label"] = r.label
        el = ET.SubElement(root, "rule", attrs)
        head = ET.SubElement(el, "head")
        head.append(_literal_el(r.head))
        if r.body:
            el.append(_container("body", r.body))
    for w, l in m.priorities:
        ET.SubElement(root, "overrides", {"winner": w, "loser": l})
    for c in m.constraints:
        el = ET.SubElement(root, "constraint")
        el.append(_container("body", c.body))
    for e in m.eca:
        attrs = {"id": e.id} if e.every is None else {"id": e.id, "every": str(e.every)}
        el = ET.SubElement(root, "eca", attrs)
        el.append(_container("event", e.event))
        el.append(_container("condition", e.condition))
        el.append(_terms_container("action", e.action))
        el.append(_terms_container("else", e.else_action))
    for n in m.norms:
        el = ET.SubElement(root, "norm", {"kind": n.kind, "id": n.id})
        if n.bearer is not None:
            el.append(_field_el("bearer", n.bearer))
        if n.trigger is not None:
            el.append(_field_el("trigger", n.trigger))
        el.append(_field_el("target", n.target))
        if n.standing:
            el.append(_field_el("deadline", sym("standing")))
        elif n.deadline is not None:
            dl = ET.Element("atom")
            ET.SubElement(dl, "rel").text = "deadline"
            ET.SubElement(dl, "data").text = ("+" if n.relative else "") + str(n.deadline)
            el.append(dl)
        if n.reparation is not None:
            el.append(_field_el("reparation", sym(n.reparation)))
        if n.breach is not None:
            el.append(_field_el("breach", n.breach))
    for t in program.tests:
        expect = t.expect if isinstance(t.expect, str) else "answers"
        el = ET.SubElement(root, "test", {"id": t.id, "expect": expect})
        el.append(_container("body", t.query))
        if t.given is not None:
            el.append(_field_el("given", text(t.given)))
        if t.at is not None:
            el.append(_field_el("at", num(t.at)))
        if not isinstance(t.expect, str):
            el.append(_field_el("answers", expectation_to_term(t.expect).args[0]))
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


# ---------------------------------------------------------------------------
# parse


class _Reader:
    def __init__(self, origin: str):
        self.origin = origin

    def fail(self, msg: str, path: str):
        return SchemaError(msg, origin=self.origin, path=path)

    def attr(self, el: ET.Element, name: str, path: str, required: bool = True) -> Optional[str]:
        v = el.get(name)
        if v is None and required:
            raise self.fail(f"missing attribute '{name}' on <{el.tag}>", path)
        return v

    def check_attrs(self, el: ET.Element, allowed: tuple, path: str):
        for k in el.attrib:
            if k not in allowed:
                raise self.fail(f"unexpected attribute '{k}' on <{el.tag}>", f"{path}/@{k}")

    def children(self, el: ET.Element, path: str):
        counts: dict = {}
        for c in el:
            counts[c.tag] = counts.get(c.tag, 0) + 1
            yield c, f"{path}/{c.tag}[{counts[c.tag]}]"

    def text_of(self, el: ET.Element, path: str) -> str:
        if len(el):
            raise self.fail(f"<{el.tag}> must contain text only", path)
        return el.text or ""

    # -- terms -----------------------------------------------------------

    def term(self, el: ET.Element, path: str) -> Term:
        tag = el.tag
        if tag == "var":
            self.check_attrs(el, ("type",), path)
            name = self.text_of(el, path).strip()
            if not name:
                raise self.fail("empty variable name", path)
            return Var(name, el.get("type"))
        if tag == "ind":
            self.check_attrs(el, ("type",), path)
            return sym(self.text_of(el, path))
        if tag == "data":
            self.check_attrs(el, (), path)
            return self.data(self.text_of(el, path), path)
        if tag == "atom":
            return self.atom(el, path)
        raise self.fail(f"unknown term element <{tag}>", path)

    def data(self, s: str, path: str) -> Const:
        s2 = s.strip()
        if s2.startswith('"'):
            from .parser import parse_term

            try:
                t = parse_term(s2)
            except Exception:
                raise self.fail(f"malformed string data {s!r}", path)
            if not (isinstance(t, Const) and t.kind == "str"):
                raise self.fail(f"malformed string data {s!r}", path)
            return t
        try:
            if _INT.match(s2):
                return num(int(s2))
            if _DEC.match(s2):
                return num(float(s2))
        except OverflowError:
            raise self.fail(f"integer data {s2} does not fit in 64 bits", path)
        raise self.fail(f"data value {s!r} is neither a number nor a quoted string", path)

    def atom(self, el: ET.Element, path: str) -> Compound:
        if el.tag != "atom":
            raise self.fail(f"expected <atom> but found <{el.tag}>", path)
        self.check_attrs(el, (), path)
        kids = list(self.children(el, path))
        if not kids or kids[0][0].tag != "rel":
            raise self.fail("<atom> must start with <rel>", path)
        rel_el, rel_path = kids[0]
        self.check_attrs(rel_el, (), rel_path)
        functor = self.text_of(rel_el, rel_path)
        args = tuple(self.term(c, p) for c, p in kids[1:])
        return Compound(functor, args)

    def literal(self, el: ET.Element, path: str) -> Literal:
        naf = neg = False
        if el.tag == "naf":
            naf = True
            el, path = self._only_child(el, path)
        if el.tag == "neg":
            neg = True
            el, path = self._only_child(el, path)
        if el.tag != "atom":
            raise self.fail(f"expected a literal but found <{el.tag}>", path)
        return Literal(self.atom(el, path), neg, naf)

    def _only_child(self, el, path):
        self.check_attrs(el, (), path)
        kids = list(self.children(el, path))
        if len(kids) != 1:
            raise self.fail(f"<{el.tag}> must wrap exactly one element", path)
        return kids[0]

    def literals(self, el: ET.Element, path: str) -> tuple:
        self.check_attrs(el, (), path)
        return tuple(self.literal(c, p) for c, p in self.children(el, path))

    def terms(self, el: ET.Element, path: str) -> tuple:
        self.check_attrs(el, (), path)
        return tuple(self.term(c, p) for c, p in self.children(el, path))

    def fields(self, el: ET.Element, path: str, allowed: tuple) -> dict:
        out = {}
        for c, p in self.children(el, path):
            if c.tag in ("body",):
                continue
            a = self.atom(c, p)
            if a.functor not in allowed:
                raise self.fail(f"unknown field '{a.functor}' in <{el.tag}>", p)
            if len(a.args) != 1:
                raise self.fail(f"field '{a.functor}' must have exactly one value", p)
            if a.functor in out:
                raise self.fail(f"duplicate field '{a.functor}'", p)
            out[a.functor] = (a.args[0], p)
        return out

    # -- document --------------------------------------------------------

    def document(self, root: ET.Element) -> Program:
        path = "/rbsla"
        if root.tag != "rbsla":
            raise self.fail(f"root element must be <rbsla>, found <{root.tag}>", "/" + root.tag)
        self.check_attrs(root, ("id",), path)
        mid = self.attr(root, "id", path)
        imports, facts, rules, prios, cons, tax, ecas, norms, tests = [], [], [], [], [], [], [], [], []
        labels: set = set()
        ids: dict = {"eca": set(), "norm": set(), "test": set()}
        for el, p in self.children(root, path):
            tag = el.tag
            if tag == "module":
                self.check_attrs(el, (), p)
                imports.append(self.text_of(el, p).strip())
            elif tag == "taxonomy":
                self.check_attrs(el, (), p)
                for s, sp in self.children(el, p):
                    if s.tag != "subclassOf":
                        raise self.fail(f"unknown element <{s.tag}> in <taxonomy>", sp)
                    self.check_attrs(s, ("sub", "super"), sp)
                    tax.append((self.attr(s, "sub", sp), self.attr(s, "super", sp)))
            elif tag in ("atom", "neg"):
                lit = self.literal(el, p)
                facts.append(lit)
            elif tag == "rule":
                rules.append(self.rule(el, p, labels))
            elif tag == "overrides":
                self.check_attrs(el, ("winner", "loser"), p)
                prios.append((self.attr(el, "winner", p), self.attr(el, "loser", p)))
            elif tag == "constraint":
                self.check_attrs(el, (), p)
                kids = list(self.children(el, p))
                if len(kids) != 1 or kids[0][0].tag != "body":
                    raise self.fail("<constraint> must contain exactly one <body>", p)
                body = self.literals(*kids[0])
                if not body:
                    raise self.fail("constraint body must be nonempty", kids[0][1])
                cons.append(IntegrityConstraint(body))
            elif tag == "eca":
                ecas.append(self.eca(el, p, ids["eca"]))
            elif tag == "norm":
                norms.append(self.norm(el, p, ids["norm"]))
            elif tag == "test":
                tests.append(self.test(el, p, ids["test"]))
            else:
                raise self.fail(f"unknown element <{tag}>", p)
        module = RuleModule(
            mid, tuple(rules), tuple(facts), tuple(prios), tuple(cons), tuple(tax), tuple(ecas), tuple(norms)
        )
        return Program(module, tuple(imports), tuple(tests), self.origin)

    def rule(self, el, path, labels: set) -> Rule:
        self.check_attrs(el, ("kind", "label"), path)
        kind = self.attr(el, "kind", path)
        if kind not in RULE_KINDS:
            raise self.fail(f"invalid value {kind!r} for attribute 'kind' (expected one of {', '.join(RULE_KINDS)})", f"{path}/@kind")
        label = el.get("label")
        if label is not None:
            if label in labels:
                raise self.fail(f"duplicate rule label {label!r}", f"{path}/@label")
            labels.add(label)
        head = None
        body: tuple = ()
        for c, p in self.children(el, path):
            if c.tag == "head" and head is None:
                h = list(self.children(c, p))
                if len(h) != 1:
                    raise self.fail("<head> must contain exactly one literal", p)
                head = self.literal(*h[0])
                if head.naf:
                    raise self.fail("rule head cannot be default-negated", p)
            elif c.tag == "body" and not body:
                body = self.literals(c, p)
            else:
                raise self.fail(f"unexpected <{c.tag}> in <rule>", p)
        if head is None:
            raise self.fail("<rule> is missing <head>", path)
        return Rule(head, body, kind, label)

    def eca(self, el, path, seen: set) -> EcaRule:
        self.check_attrs(el, ("id", "every"), path)
        eid = self.attr(el, "id", path)
        if eid in seen:
            raise self.fail(f"duplicate eca id {eid!r}", f"{path}/@id")
        seen.add(eid)
        every_s = el.get("every")
        if every_s is None:
            every: Union[int, str, None] = None
        elif every_s == ON_INGEST:
            every = ON_INGEST
        elif every_s.isdigit() and int(every_s) >= 1:
            every = int(every_s)
        else:
            raise self.fail(f"invalid value {every_s!r} for attribute 'every'", f"{path}/@every")
        parts = {}
        for c, p in self.children(el, path):
            if c.tag not in ("event", "condition", "action", "else") or c.tag in parts:
                raise self.fail(f"unexpected <{c.tag}> in <eca>", p)
            parts[c.tag] = self.literals(c, p) if c.tag in ("event", "condition") else self.terms(c, p)
        if not parts.get("action"):
            raise self.fail("<eca> needs a nonempty <action>", path)
        return EcaRule(eid, every, parts.get("event", ()), parts.get("condition", ()), parts["action"], parts.get("else", ()))

    def norm(self, el, path, seen: set) -> Norm:
        self.check_attrs(el, ("kind", "id"), path)
        nid = self.attr(el, "id", path)
        kind = self.attr(el, "kind", path)
        if kind not in NORM_KINDS:
            raise self.fail(f"invalid value {kind!r} for attribute 'kind'", f"{path}/@kind")
        if nid in seen:
            raise self.fail(f"duplicate norm id {nid!r}", f"{path}/@id")
        seen.add(nid)
        f = self.fields(el, path, _NORM_FIELDS)
        if "target" not in f:
            raise self.fail("<norm> is missing its target field", path)
        deadline, relative, standing = None, True, False
        if "deadline" in f:
            v, p = f["deadline"]
            if isinstance(v, Const) and v.kind == "sym" and v.value == "standing":
                standing = True
            elif isinstance(v, Const) and v.kind == "int":
                deadline, relative = v.value, False
            else:
                raise self.fail("deadline must be standing, N or +N", p)
            dl_el = [c for c in el if c.tag == "atom" and len(c) > 1 and (c[0].text or "") == "deadline"]
            if dl_el and (dl_el[0][1].text or "").strip().startswith("+"):
                relative = True
        reparation = None
        if "reparation" in f:
            v, p = f["reparation"]
            if not (isinstance(v, Const) and v.kind == "sym"):
                raise self.fail("reparation must name a norm", p)
            reparation = v.value
        try:
            return Norm(
                nid,
                kind,
                f["target"][0],
                bearer=f.get("bearer", (None,))[0],
                trigger=f.get("trigger", (None,))[0],
                deadline=deadline,
                relative=relative,
                standing=standing,
                reparation=reparation,
                breach=f.get("breach", (None,))[0],
            )
        except ValueError as exc:
            raise self.fail(str(exc), path)

    def test(self, el, path, seen: set) -> TestCase:
        self.check_attrs(el, ("id", "expect"), path)
        tid = self.attr(el, "id", path)
        if tid in seen:
            raise self.fail(f"duplicate test id {tid!r}", f"{path}/@id")
        seen.add(tid)
        expect_s = self.attr(el, "expect", path)
        if expect_s not in EXPECT_KEYWORDS + ("answers",):
            raise self.fail(f"invalid value {expect_s!r} for attribute 'expect'", f"{path}/@expect")
        bodies = [(c, p) for c, p in self.children(el, path) if c.tag == "body"]
        if len(bodies) != 1:
            raise self.fail("<test> must contain exactly one <body>", path)
        query = self.literals(*bodies[0])
        f = self.fields(el, path, ("given", "at", "answers"))
        given = at = None
        if "given" in f:
            v, p = f["given"]
            if not (isinstance(v, Const) and v.kind == "str"):
                raise self.fail("given must be a quoted file name", p)
            given = v.value
        if "at" in f:
            v, p = f["at"]
            if not (isinstance(v, Const) and v.kind == "int"):
                raise self.fail("at must be an integer", p)
            at = v.value
        if expect_s == "answers":
            if "answers" not in f:
                raise self.fail("expect='answers' needs an answers field", path)
            try:
                expect = expectation_from_term(Compound("answers", (f["answers"][0],)))
            except ValueError as exc:
                raise self.fail(str(exc), f["answers"][1])
        else:
            expect = expect_s
        return TestCase(tid, query, expect, given, at)


def parse_rbsla(src: Union[str, bytes], origin: str = "<xml>") -> Program:
    """Parse an rbsla document; raises SchemaError (a ParseError) with an element path."""
    try:
        root = ET.fromstring(src)
    except ET.ParseError as exc:
        line, col = exc.position
        raise SchemaError(f"malformed XML: {exc}", line, col + 1, origin) from None
    return _Reader(origin).document(root)
