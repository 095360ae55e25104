"""Synthetic benchmark programs and a timing harness."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .defeasible import DefeasibleTheory, compile
from .errors import ResourceError, SlalogError
from .kb import KnowledgeBase, RuleModule, kb_from_modules
from .solver import Solver, SolverConfig, query_truth
from .terms import Compound, Const, Literal, Rule, Var, sym

PROFILES = ("chain", "tc", "win", "defeasible")


@dataclass(frozen=True)
class BenchRow:
    profile: str
    size: int
    rules: int
    answers: Optional[int]
    truth: Optional[str]
    wall_s: float
    peak_memo: Optional[int]
    status: str = "ok"
    repeat: int = 1

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Workload:
    kb: KnowledgeBase
    query: tuple
    rules: int  # facts count as rules


def _lit(functor: str, *args) -> Literal:
    return Literal(Compound(functor, tuple(args)))


def _i(v: int) -> Const:
    return Const(v, "int")


def cycle_name(i: int) -> str:
    """0 -> a, 25 -> z, 26 -> aa, ..."""
    s = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        s = chr(ord("a") + r) + s
    return s


def make_profile(profile: str, n: int) -> Workload:
    if n < 1:
        raise ValueError("size must be >= 1")
    X, Y, Z = Var("X"), Var("Y"), Var("Z")
    if profile == "chain":
        rules = [Rule(_lit(f"p{i}"), (_lit(f"p{i - 1}"),)) for i in range(1, n + 1)]
        mod = RuleModule("bench", rules=tuple(rules), facts=(_lit("p0"),))
        return Workload(kb_from_modules(mod), (_lit(f"p{n}"),), n + 1)
    if profile == "tc":
        edges = tuple(_lit("edge", _i(i), _i(i + 1)) for i in range(1, n))
        rules = (
            Rule(_lit("reach", X, Y), (_lit("edge", X, Y),)),
            Rule(_lit("reach", X, Z), (_lit("reach", X, Y), _lit("edge", Y, Z))),
        )
        mod = RuleModule("bench", rules=rules, facts=edges)
        return Workload(kb_from_modules(mod), (_lit("reach", X, Y),), len(edges) + 2)
    if profile == "win":
        moves = tuple(_lit("move", sym(cycle_name(i)), sym(cycle_name((i + 1) % n))) for i in range(n))
        rule = Rule(_lit("win", X), (_lit("move", X, Y), Literal(Compound("win", (Y,)), naf=True)))
        mod = RuleModule("bench", rules=(rule,), facts=moves)
        return Workload(kb_from_modules(mod), (_lit("win", X),), n + 1)
    if profile == "defeasible":
        rules, sup = [], []
        for i in range(1, n + 1):
            rules.append(Rule(_lit(f"p{i}"), (_lit("q"),), "defeasible", f"a{i}"))
            rules.append(Rule(Literal(Compound(f"p{i}", ()), neg=True), (_lit("q"),), "defeasible", f"b{i}"))
            sup.append((f"a{i}", f"b{i}"))
        theory = DefeasibleTheory.from_rules(rules, [_lit("q")], sup)
        kb = kb_from_modules(compile(theory, "bench"))
        return Workload(kb, (_lit("defeasibly", X),), 2 * n + 1)
    raise ValueError(f"unknown profile {profile!r}; expected one of {', '.join(PROFILES)}")


def run_bench(profile: str, n: int, repeat: int = 1, config: Optional[SolverConfig] = None) -> BenchRow:
    """Best-of-``repeat`` wall time; workload construction is not timed."""
    repeat = max(1, repeat)
    try:
        w = make_profile(profile, n)
    except ResourceError as e:
        return BenchRow(profile, n, 0, None, None, 0.0, None, f"resource: {e}", repeat)
    best = None
    answers = truth = peak = None
    for _ in range(repeat):
        solver = Solver(w.kb, config)
        t0 = time.perf_counter()
        try:
            res = solver.solve(w.query)
        except ResourceError as e:
            return BenchRow(profile, n, w.rules, None, None, time.perf_counter() - t0, solver.last_tables, f"resource: {e}", repeat)
        except SlalogError as e:
            return BenchRow(profile, n, w.rules, None, None, time.perf_counter() - t0, None, f"error: {e}", repeat)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
        answers, truth, peak = len(res), str(query_truth(res)), solver.last_tables
    return BenchRow(profile, n, w.rules, answers, truth, best, peak, "ok", repeat)


def format_table(rows) -> str:
    head = ("profile", "size", "rules", "answers", "truth", "wall_s", "peak_memo", "status")
    body = [
        (r.profile, str(r.size), str(r.rules), "-" if r.answers is None else str(r.answers), r.truth or "-",
         f"{r.wall_s:.4f}", "-" if r.peak_memo is None else str(r.peak_memo), r.status)
        for r in rows
    ]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in [head, *body]]
    return "\n".join(lines) + "\n"
