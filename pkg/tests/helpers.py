"""Shared builders and random generators for the test suite."""
from __future__ import annotations

import random

from slalog.kb import kb_from_modules
from slalog.lang.parser import parse_literal, parse_program
from slalog.solver import truth_of


def kb_of(src: str, module: str = "main"):
    prog = parse_program(src if ":- module(" in src else f":- module({module}).\n{src}")
    return kb_from_modules(prog.module)


def truth(kb, lit: str) -> str:
    return str(truth_of(kb, parse_literal(lit)))


def random_ground_program(rng: random.Random, max_atoms: int = 12, max_rules: int = 24):
    """Ground normal program as (head, pos, neg) string triples."""
    n_atoms = rng.randint(1, max_atoms)
    atoms = [f"a{i}" for i in range(n_atoms)]
    prog = []
    for _ in range(rng.randint(0, max_rules)):
        head = rng.choice(atoms)
        k = rng.randint(0, 3)
        body = rng.sample(atoms, min(k, n_atoms))
        pos, neg = [], []
        for b in body:
            (neg if rng.random() < 0.4 else pos).append(b)
        prog.append((head, tuple(pos), tuple(neg)))
    return atoms, prog


def program_text(prog) -> str:
    lines = []
    for h, pos, neg in prog:
        body = list(pos) + [f"not {b}" for b in neg]
        lines.append(f"{h} :- {', '.join(body)}." if body else f"{h}.")
    return "\n".join(lines) + "\n"


def random_defeasible_theory(rng: random.Random, max_rules: int = 10, n_props: int = 4):
    """(facts, rules, sup) in the oracle's string format."""
    props = [f"p{i}" for i in range(n_props)]

    def lit():
        p = rng.choice(props)
        return "~" + p if rng.random() < 0.4 else p

    facts = sorted({lit() for _ in range(rng.randint(0, 2))})
    rules = []
    for i in range(rng.randint(0, max_rules)):
        kind = rng.choices(["strict", "defeasible", "defeater"], [2, 6, 1])[0]
        body = tuple(sorted({lit() for _ in range(rng.randint(0, 2))}))
        rules.append((f"r{i}", kind, lit(), body))
    sup = set()
    labels = [r[0] for r in rules]
    for _ in range(rng.randint(0, len(rules))):
        a, b = rng.sample(labels, 2) if len(labels) >= 2 else (None, None)
        if a is None:
            break
        # keep it acyclic by only letting the higher index win
        w, l = (a, b) if int(a[1:]) > int(b[1:]) else (b, a)
        sup.add((w, l))
    return facts, rules, sup


def _lit_text(l: str) -> str:
    return f"neg {l[1:]}" if l.startswith("~") else l


def theory_text(facts, rules, sup) -> str:
    ops = {"strict": ":-", "defeasible": ":=", "defeater": ":~"}
    lines = [f"{_lit_text(f)}." for f in facts]
    for label, kind, head, body in rules:
        b = ", ".join(_lit_text(x) for x in body) or "true"
        lines.append(f"{label}: {_lit_text(head)} {ops[kind]} {b}.")
    lines += [f"overrides({w}, {l})." for w, l in sorted(sup)]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# random modules for serialization roundtrips


def random_program(rng: random.Random, module_id: str = "gen"):
    from slalog.kb import RuleModule
    from slalog.lang.parser import Program
    from slalog.model import EcaRule, Norm, TestCase
    from slalog.terms import Compound, Const, IntegrityConstraint, Literal, Rule, Var

    types = ["gold", "silver", "customer"]
    taxonomy = (("gold", "customer"), ("silver", "customer"))

    def const():
        k = rng.randrange(4)
        if k == 0:
            return Const(rng.choice(["a", "b", "web1", "acme"]), "sym")
        if k == 1:
            return Const(rng.randint(-10**6, 10**6), "int")
        if k == 2:
            return Const(rng.choice([0.5, -2.25, 1e-3, 3.0]), "dec")
        return Const(rng.choice(["", "hello world", "a<b>&\"c\"", "π ≈ 3.14", "it's"]), "str")

    def var():
        name = rng.choice(["X", "Y", "Z", "Cust"])
        return Var(name, rng.choice(types) if rng.random() < 0.2 else None)

    def term(depth=0):
        r = rng.random()
        if depth < 2 and r < 0.2:
            return Compound(rng.choice(["f", "g"]), tuple(term(depth + 1) for _ in range(rng.randint(1, 2))))
        return var() if r < 0.55 else const()

    def lit(allow_naf=False, ground=False):
        args = tuple(const() if ground else term() for _ in range(rng.randint(0, 2)))
        return Literal(
            Compound(rng.choice(["p", "q", "r", "service"]), args),
            neg=rng.random() < 0.2,
            naf=allow_naf and rng.random() < 0.25,
        )

    rules, used = [], set()
    for i in range(rng.randint(0, 5)):
        body = tuple(lit(allow_naf=True) for _ in range(rng.randint(0, 3)))
        # keep naf literals safe: their variables must appear positively somewhere
        body = tuple(b for b in body if not b.naf) + tuple(
            Literal(b.atom, b.neg, True) for b in body if b.naf and not any(isinstance(a, (Var, Compound)) for a in b.atom.args)
        )
        kind = rng.choice(["strict", "strict", "defeasible", "defeater"])
        label = f"r{i}" if rng.random() < 0.6 else None
        if label:
            used.add(label)
        head = lit()
        rules.append(Rule(head, body, kind, label))
    facts = tuple(lit(ground=True) for _ in range(rng.randint(0, 4)))
    labels = sorted(used)
    prios = tuple((labels[i], labels[i - 1]) for i in range(1, len(labels)) if rng.random() < 0.5)
    cons = tuple(IntegrityConstraint((lit(), lit())) for _ in range(rng.randint(0, 1)))
    eca = ()
    if rng.random() < 0.5:
        eca = (
            EcaRule(
                "watch",
                rng.choice([None, 1000, "on_ingest"]),
                (Literal(Compound("detect", (Compound("seq", (Compound("a", ()), Compound("b", ()))),))),),
                (lit(),),
                (Compound("assert", (Compound("down", (Const("web1", "sym"),)),)),),
                (Compound("notify", (Const("ops", "sym"), Const("ok", "str"))),) if rng.random() < 0.5 else (),
            ),
        )
    norms = ()
    if rng.random() < 0.5:
        norms = (
            Norm("o1", "obligation", Compound("pay", ()), Const("hoster", "sym"), Compound("outage", ()),
                 rng.randint(1, 5000), rng.random() < 0.5, False, "o2"),
            Norm("o2", rng.choice(["obligation", "prohibition"]), Compound("refund", ()), deadline=100),
            Norm("p1", "permission", Compound("audit", ())),
        )
    tests = ()
    if rng.random() < 0.5:
        tests = (
            TestCase("t1", (lit(),), rng.choice(["true", "false", "undefined"])),
            TestCase("t2", (Literal(Compound("p", (Var("X"),))),), ("answers", ((("X", const()),),)), "fix.ctr", 500),
        )
    mod = RuleModule(module_id, tuple(rules), facts, prios, cons, taxonomy if rng.random() < 0.5 else (), eca, norms)
    return Program(mod, tuple(f"lib{i}.ctr" for i in range(rng.randint(0, 1))), tests)
