"""Event calculus: the axiom library module, ``holds_at`` and a reference timeline."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional, Sequence

from .errors import InstantiationError
from .kb import AddModule, KnowledgeBase, RuleModule, kb_apply
from .solver import SolverConfig, TruthValue, query_truth, solve
from .terms import Compound, Const, Literal, Term, format_term, is_ground, match_into, resolve, term_order

EC_MODULE = "ec_axioms"


@lru_cache(maxsize=None)
def library_module(name: str) -> RuleModule:
    """A rule module shipped in ``slalog/library`` (e.g. ``ec_axioms``)."""
    from .lang.parser import parse_program

    src = resources.files("slalog.library").joinpath(f"{name}.ctr").read_text(encoding="utf-8")
    return parse_program(src, f"{name}.ctr").module


def with_ec(kb: KnowledgeBase) -> KnowledgeBase:
    """``kb`` with the event-calculus axioms loaded (no-op if already present)."""
    if EC_MODULE in kb:
        return kb
    return kb_apply(kb, [AddModule(library_module(EC_MODULE))])[0]


def holds_at(kb: KnowledgeBase, fluent: Term, t: int, config: Optional[SolverConfig] = None) -> TruthValue:
    kb = with_ec(kb)
    goal = Literal(Compound("holds_at", (fluent, Const(int(t), "int"))))
    return query_truth(solve(kb, [goal], config))


def happens(event: Term, t: int) -> Literal:
    return Literal(Compound("happens", (event, Const(int(t), "int"))))


# ---------------------------------------------------------------------------
# reference timeline (forward sweep), independent of the rule engine


def simulate_timeline(
    narrative: Iterable[tuple],
    initiates: Sequence[tuple] = (),
    terminates: Sequence[tuple] = (),
    initially: Iterable[Term] = (),
    horizon: Optional[int] = None,
) -> dict:
    """Sweep the narrative once and return ``fluent -> [(start, end), ...]``.

    ``narrative`` holds (time, event) pairs.  ``initiates``/``terminates``
    hold (event pattern, fluent pattern) pairs sharing variables.  An interval
    (s, e) means the fluent holds at every t with s < t <= e; ``e is None``
    leaves it open and ``s == -1`` marks a fluent held from time 0.
    """
    by_time: dict = {}
    for t, e in narrative:
        if horizon is not None and t > horizon:
            continue
        by_time.setdefault(t, []).append(e)

    def effects(pairs, event):
        out = set()
        for pat, fl in pairs:
            s: dict = {}
            if match_into(pat, event, s):
                f = resolve(fl, s)
                if not is_ground(f):
                    raise InstantiationError(f"effect {format_term(fl)} of {format_term(event)} is not ground")
                out.add(f)
        return out

    open_since: dict = {}
    intervals: dict = {}
    for f in initially:
        open_since[f] = -1
    for t in sorted(by_time):
        started, stopped = set(), set()
        for e in by_time[t]:
            started |= effects(initiates, e)
            stopped |= effects(terminates, e)
        for f in stopped:
            if f in open_since:
                intervals.setdefault(f, []).append((open_since.pop(f), t))
        for f in started - stopped:
            if f not in open_since:
                open_since[f] = t
    for f, s in open_since.items():
        intervals.setdefault(f, []).append((s, None))
    return {f: sorted(v, key=lambda iv: iv[0]) for f, v in sorted(intervals.items(), key=lambda kv: term_order(kv[0]))}


def holds_in(intervals: Sequence[tuple], t: int) -> bool:
    return any(s < t and (e is None or t <= e) for s, e in intervals)
