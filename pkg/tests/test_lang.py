import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slalog.errors import ParseError, SchemaError
from slalog.lang.loader import load_contracts, read_program
from slalog.lang.parser import parse_program
from slalog.lang.rbsla import emit_rbsla, parse_rbsla
from slalog.terms import Compound, Literal, Rule, Var

from helpers import random_program

CONTRACTS = Path(__file__).resolve().parent.parent / "contracts"


def module(src):
    return parse_program(":- module(m).\n" + src).module


def test_strict_rule_with_naf():
    (r,) = module("p(X) :- q(X), not r(X).").rules
    X = Var("X")
    assert r == Rule(
        Literal(Compound("p", (X,))),
        (Literal(Compound("q", (X,))), Literal(Compound("r", (X,)), naf=True)),
    )


def test_labeled_defeasible_and_defeater():
    m = module("r2: flies(X) := bird(X).\nd1: neg flies(X) :~ hurt(X).\noverrides(r2, d1).")
    assert [(r.label, r.kind) for r in m.rules] == [("r2", "defeasible"), ("d1", "defeater")]
    assert m.rules[1].head.neg
    assert m.priorities == (("r2", "d1"),)


def test_missing_dot_is_located():
    with pytest.raises(ParseError) as e:
        parse_program("p(X) :- q(X)")
    assert e.value.line == 1 and e.value.column > 0
    assert "expected" in e.value.message


def test_duplicate_label_rejected():
    with pytest.raises(ParseError):
        module("r1: p := q.\nr1: s := q.")


def test_unknown_directive_rejected():
    with pytest.raises(ParseError):
        parse_program(":- frobnicate(x).")


def test_directives_and_blocks():
    prog = parse_program(
        ':- module(sla).\n:- import("base.ctr").\n:- type(gold < customer).\n'
        "constraint :- q(X), neg q(X).\n"
        "eca e1 { every: 500; event: happens(ping(S), T); condition: up(S); action: assert(seen(S)); else: notify(ops, \"x\") }\n"
        "norm o1 { kind: obligation; target: pay; deadline: +100; reparation: o2 }\n"
        "norm o2 { kind: obligation; target: refund; deadline: 5000 }\n"
        "test t1 { given: \"f.ctr\"; at: 5000; query: holds_at(light, 5); expect: true }\n"
    )
    m = prog.module
    assert m.id == "sla" and prog.imports == ("base.ctr",)
    assert m.taxonomy == (("gold", "customer"),)
    assert len(m.constraints) == 1
    (e,) = m.eca
    assert e.every == 500 and e.else_action
    o1, o2 = m.norms
    assert o1.relative and o1.deadline == 100 and o1.reparation == "o2"
    assert not o2.relative and o2.deadline == 5000
    (t,) = prog.tests
    assert (t.given, t.at, t.expect) == ("f.ctr", 5000, "true")


def test_empty_module_xml():
    from slalog.kb import RuleModule

    xml = emit_rbsla(RuleModule("m"))
    assert xml.strip() in ('<rbsla id="m"/>', '<rbsla id="m" />')


def test_bogus_rule_kind_names_the_value():
    with pytest.raises(SchemaError) as e:
        parse_rbsla('<rbsla id="m"><rule kind="bogus"><head><atom><rel>p</rel></atom></head></rule></rbsla>')
    assert "bogus" in str(e.value)


def test_overrides_element():
    prog = parse_rbsla(
        '<rbsla id="m">'
        '<rule kind="defeasible" label="r2"><head><atom><rel>p</rel></atom></head></rule>'
        '<rule kind="defeasible" label="r3"><head><neg><atom><rel>p</rel></atom></neg></head></rule>'
        '<overrides winner="r3" loser="r2"/></rbsla>'
    )
    assert prog.module.priorities == (("r3", "r2"),)


def test_eca_element_has_four_roles():
    import xml.etree.ElementTree as ET

    prog = parse_program(":- module(m).\neca e { every: 1000; event: a; condition: b; action: assert(c); else: assert(d) }")
    root = ET.fromstring(emit_rbsla(prog))
    (eca,) = root.findall("eca")
    assert [c.tag for c in eca] == ["event", "condition", "action", "else"]


@pytest.mark.parametrize("stem", ["tweety"])
def test_text_and_xml_fixtures_agree(stem):
    assert read_program(CONTRACTS / f"{stem}.ctr") == read_program(CONTRACTS / f"{stem}.xml")


def test_golden_contract_roundtrips():
    prog = read_program(CONTRACTS / "golden_sla.ctr")
    assert parse_rbsla(emit_rbsla(prog)) == prog


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_xml_roundtrip(seed):
    prog = random_program(random.Random(seed))
    assert parse_rbsla(emit_rbsla(prog)) == prog


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_parsers_never_crash_on_bytes(data):
    for parse in (parse_program, parse_rbsla):
        try:
            parse(data)
        except ParseError:
            pass


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("pqX(),.:-=~ not neg{}[]\"'%0123456789_ab\n")), max_size=80))
def test_parser_never_crashes_on_token_soup(src):
    try:
        parse_program(src)
    except ParseError:
        pass


def test_imports_resolve_relative_and_detect_cycles(tmp_path):
    (tmp_path / "lib").mkdir()
    (tmp_path / "lib" / "base.ctr").write_text(":- module(base).\nq(a).\n")
    (tmp_path / "main.ctr").write_text(':- module(main).\n:- import("lib/base.ctr").\np(X) :- q(X).\n')
    c = load_contracts([tmp_path / "main.ctr"])
    assert set(c.kb.modules) == {"base", "main"} and c.contract_id == "main"
    (tmp_path / "a.ctr").write_text(':- module(a).\n:- import("b.ctr").\n')
    (tmp_path / "b.ctr").write_text(':- module(b).\n:- import("a.ctr").\n')
    with pytest.raises(ParseError, match="cycle"):
        load_contracts([tmp_path / "a.ctr"])
