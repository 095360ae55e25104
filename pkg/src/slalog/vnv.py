"""Declarative test suites for rule bases."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import SlalogError
from .kb import AddModule, KnowledgeBase, ReplaceModule, kb_apply
from .model import TestCase
from .solver import TRUE, Solver, SolverConfig, query_truth
from .terms import (
    Compound,
    Const,
    format_literal,
    format_term,
    variant_key,
)


@dataclass(frozen=True)
class CaseResult:
    id: str
    status: str  # pass | fail | error
    actual: Optional[str] = None
    diagnostic: Optional[str] = None

    def as_dict(self) -> dict:
        d = {"id": self.id, "status": self.status}
        if self.actual is not None:
            d["actual"] = self.actual
        if self.diagnostic is not None:
            d["diagnostic"] = self.diagnostic
        return d


@dataclass(frozen=True)
class IntegrityViolation:
    constraint: str
    witness: str
    context: str = "suite"  # "suite" or the id of the case whose fixture exposed it

    def as_dict(self) -> dict:
        return {"constraint": self.constraint, "witness": self.witness, "context": self.context}


@dataclass(frozen=True)
class SuiteReport:
    results: tuple = ()
    integrity: tuple = ()

    def count(self, status: str) -> int:
        return sum(1 for r in self.results if r.status == status)

    @property
    def passes(self) -> int:
        return self.count("pass")

    @property
    def fails(self) -> int:
        return self.count("fail")

    @property
    def errors(self) -> int:
        return self.count("error")

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def ok(self) -> bool:
        return self.passes == self.total and not self.integrity

    def as_dict(self) -> dict:
        return {
            "cases": [r.as_dict() for r in self.results],
            "counts": {"pass": self.passes, "fail": self.fails, "error": self.errors, "total": self.total},
            "integrity_violations": [v.as_dict() for v in self.integrity],
            "ok": self.ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            line = f"{r.status.upper():5} {r.id}"
            if r.status == "fail":
                line += f"  (actual: {r.actual})"
            elif r.status == "error":
                line += f"  ({r.diagnostic})"
            lines.append(line)
        for v in self.integrity:
            lines.append(f"INTEGRITY {v.constraint}  witness {v.witness}  [{v.context}]")
        lines.append(
            f"{self.total} cases: {self.passes} passed, {self.fails} failed, {self.errors} errors; "
            f"{len(self.integrity)} integrity violation(s)"
        )
        return "\n".join(lines) + "\n"


def _truncate(kb: KnowledgeBase, at: int) -> KnowledgeBase:
    """Drop ``happens(E, T)`` facts with T > at."""
    ups = []
    for m in kb.modules.values():
        keep = tuple(
            f
            for f in m.facts
            if not (
                f.atom.functor == "happens"
                and len(f.atom.args) == 2
                and not f.neg
                and isinstance(f.atom.args[1], Const)
                and f.atom.args[1].kind == "int"
                and f.atom.args[1].value > at
            )
        )
        if keep != m.facts:
            ups.append(ReplaceModule(replace(m, facts=keep)))
    return kb_apply(kb, ups)[0] if ups else kb


def _canonical_answers(answers: Iterable[tuple]) -> frozenset:
    out = set()
    for b in answers:
        b = tuple(sorted(b))
        names = tuple(n for n, _ in b)
        out.add((names, variant_key(Compound("$a", tuple(t for _, t in b)))))
    return frozenset(out)


def _format_answers(answers: Sequence[tuple]) -> str:
    parts = []
    for b in answers:
        inner = ", ".join(f"{n}={format_term(t)}" for n, t in sorted(b))
        parts.append(f"[{inner}]")
    return "answers([" + ", ".join(parts) + "])"


def _snapshot(kb: KnowledgeBase, case: TestCase, base_dir: Path, config) -> KnowledgeBase:
    from .lang.loader import read_program

    snap = kb
    if case.given:
        p = Path(case.given)
        prog = read_program(p if p.is_absolute() else base_dir / p)
        snap = kb_apply(snap, [AddModule(prog.module)])[0]
    if case.at is not None:
        snap = _truncate(snap, case.at)
    if snap.norms:
        from .deontic import with_deontic

        snap = with_deontic(snap, case.at, config)
    return snap


def _run_case(kb: KnowledgeBase, case: TestCase, base_dir: Path, config) -> tuple:
    try:
        snap = _snapshot(kb, case, base_dir, config)
    except (SlalogError, OSError) as e:
        return CaseResult(case.id, "error", diagnostic=f"fixture: {e}"), []
    try:
        answers = Solver(snap, config).solve(case.query)
    except SlalogError as e:
        return CaseResult(case.id, "error", diagnostic=str(e)), []
    if isinstance(case.expect, str):
        actual = str(query_truth(answers))
        status = "pass" if actual == case.expect else "fail"
    else:
        got = [tuple(b for b in a.bindings if not b[0].startswith("_")) for a in answers if a.truth is TRUE]
        actual = _format_answers(got)
        status = "pass" if _canonical_answers(got) == _canonical_answers(case.expect[1]) else "fail"
    extra = integrity_violations(snap, config, case.id) if case.given else []
    return CaseResult(case.id, status, actual), extra


def integrity_violations(kb: KnowledgeBase, config: Optional[SolverConfig] = None, context: str = "suite") -> list:
    """A constraint is violated iff its body has a True answer."""
    out = []
    solver = Solver(kb, config)
    for c in kb.constraints:
        text = "constraint :- " + ", ".join(format_literal(l) for l in c.body) + "."
        for a in solver.solve(c.body):
            if a.truth is TRUE:
                witness = ", ".join(f"{n}={format_term(t)}" for n, t in a.bindings) or "yes"
                out.append(IntegrityViolation(text, witness, context))
    return out


def run_suite(
    kb: KnowledgeBase,
    suite: Iterable[TestCase],
    base_dir: Optional[Path] = None,
    config: Optional[SolverConfig] = None,
    parallel: bool = False,
) -> SuiteReport:
    cases = list(suite)
    ids = [c.id for c in cases]
    dup = {i for i in ids if ids.count(i) > 1}
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    if parallel and len(cases) > 1:
        with ThreadPoolExecutor() as pool:
            outcomes = list(pool.map(lambda c: _run_case(kb, c, base_dir, config), cases))
    else:
        outcomes = [_run_case(kb, c, base_dir, config) for c in cases]
    results = []
    found: list = []
    for c, (res, extra) in zip(cases, outcomes):
        if c.id in dup:
            res = CaseResult(c.id, "error", diagnostic=f"duplicate test id {c.id!r}")
        results.append(res)
        found.extend(extra)
    try:
        base = integrity_violations(kb, config)
    except SlalogError as e:
        base = [IntegrityViolation("<evaluation error>", str(e))]
    seen = set()
    integrity = []
    for v in base + found:
        k = (v.constraint, v.witness)
        if k not in seen:
            seen.add(k)
            integrity.append(v)
    return SuiteReport(tuple(results), tuple(integrity))
