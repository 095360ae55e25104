import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slalog.defeasible import DefeasibleTheory, ProofTag, compile, conclusions, prove, theory_from_kb
from slalog.errors import TheoryError
from slalog.kb import kb_from_modules
from slalog.lang.parser import parse_literal, parse_program
from slalog.solver import TRUE, solve, truth_of
from slalog.terms import Compound, Const, Literal, literal_to_term

from helpers import kb_of, random_defeasible_theory, theory_text
from oracles import defeasible_tags

TWEETY = """
bird(X) :- penguin(X).
r2: flies(X) := bird(X).
r3: neg flies(X) := penguin(X).
overrides(r3, r2).
penguin(t).
"""


def theory(src):
    return DefeasibleTheory.from_module(parse_program(":- module(th).\n" + src).module)


def lit(s):
    return parse_literal(s)


def test_tweety_prove():
    th = theory(TWEETY)
    assert prove(th, lit("neg flies(t)"), "+d") == "yes"
    assert prove(th, lit("flies(t)"), "+d") == "no"
    assert prove(th, lit("flies(t)"), "-d") == "yes"
    assert prove(th, lit("bird(t)"), "+D") == "yes"


def test_single_rule():
    assert prove(theory("p := q. q."), lit("p"), ProofTag.parse("+d")) == "yes"


def test_mutual_attack_without_superiority():
    th = theory("a: p := true. b: neg p := true.")
    assert prove(th, lit("p"), "-d") == "yes"
    assert prove(th, lit("neg p"), "-d") == "yes"


def test_tweety_without_superiority_blocks_both():
    th = theory(TWEETY.replace("overrides(r3, r2).", ""))
    assert prove(th, lit("flies(t)"), "-d") == "yes"
    assert prove(th, lit("neg flies(t)"), "-d") == "yes"


def test_loop_is_not_derivable():
    th = theory("p := p.")
    assert prove(th, lit("p"), "+d") == "not-derivable"
    assert prove(th, lit("p"), "-d") == "not-derivable"


def test_defeater_blocks_but_never_supports():
    th = theory("q. r1: p := q. d1: neg p :~ q.")
    assert prove(th, lit("p"), "-d") == "yes"
    assert prove(th, lit("neg p"), "+d") == "no"
    th2 = theory("q. r1: p := q. d1: neg p :~ q. overrides(r1, d1).")
    assert prove(th2, lit("p"), "+d") == "yes"


def test_no_team_defeat():
    # r1 beats s1 but not s2; r2 beats s2 but not s1 -> no single rule wins
    src = "q. r1: p := q. r2: p := q. s1: neg p := q. s2: neg p := q. overrides(r1, s1). overrides(r2, s2)."
    assert prove(theory(src), lit("p"), "+d") == "no"


def test_theory_validation():
    with pytest.raises(TheoryError):
        DefeasibleTheory.from_rules([], [], [("x", "y")])
    with pytest.raises(TheoryError):
        theory("a: p := q. b: neg p := q. overrides(a, b). overrides(b, a).")


def test_compile_examples():
    th = theory(TWEETY)
    kb = kb_from_modules(compile(th))
    goal = Literal(Compound("defeasibly", (literal_to_term(lit("neg flies(t)")),)))
    assert truth_of(kb, goal) is TRUE
    empty = compile(DefeasibleTheory())
    assert not empty.rules and not empty.facts
    kb = kb_from_modules(compile(theory("p.")))
    assert truth_of(kb, lit("defeasibly(p)")) is TRUE


def test_hybrid_theory_reads_base_predicates():
    kb = kb_of("bird(X) :- penguin(X). penguin(t). eagle(e). bird(e).\nr2: flies(X) := bird(X).\nr3: neg flies(X) := penguin(X).\noverrides(r3, r2).")
    th = theory_from_kb(kb)
    c = conclusions(th)
    assert lit("neg flies(t)") in c.plus_partial
    assert lit("flies(e)") in c.plus_partial
    assert lit("flies(t)") not in c.plus_partial


def _term_str(t):
    if isinstance(t, Compound) and t.functor == "neg":
        return "~" + _term_str(t.args[0])
    return t.value if isinstance(t, Const) else t.functor


def _run(seed):
    facts, rules, sup = random_defeasible_theory(random.Random(seed))
    th = theory(theory_text(facts, rules, sup))
    return facts, rules, sup, th


def _universe(facts, rules):
    props = {l.lstrip("~") for l in facts} | {r[2].lstrip("~") for r in rules}
    props |= {b.lstrip("~") for r in rules for b in r[3]}
    return sorted(props | {"~" + p for p in props})


def _to_lit(s):
    return lit(f"neg {s[1:]}" if s.startswith("~") else s)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_prove_matches_condition_oracle(seed):
    facts, rules, sup, th = _run(seed)
    ref = defeasible_tags(facts, rules, sup)
    for s in _universe(facts, rules):
        for tag, key in (("+D", "+D"), ("-D", "-D"), ("+d", "+d"), ("-d", "-d")):
            got = prove(th, _to_lit(s), tag) == "yes"
            assert got == (s in ref[key]), (theory_text(facts, rules, sup), s, tag)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_compile_agrees_with_prove(seed):
    facts, rules, sup, th = _run(seed)
    kb = kb_from_modules(compile(th))
    yes = {_term_str(a["X"]) for a in solve(kb, [lit("defeasibly(X)")]) if a.truth is TRUE}
    for s in _universe(facts, rules):
        assert (prove(th, _to_lit(s), "+d") == "yes") == (s in yes), (theory_text(facts, rules, sup), s)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_coherence_and_consistency(seed):
    _, _, _, th = _run(seed)
    c = conclusions(th)
    assert not (c.plus_partial & c.minus_partial)
    assert not (c.plus_delta & c.minus_delta)
    assert c.plus_delta <= c.plus_partial
    for q in c.plus_partial:
        if q.complement() in c.plus_partial:
            assert q in c.plus_delta and q.complement() in c.plus_delta
