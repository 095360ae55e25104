"""Reactive layer: ECA rules polled against KB snapshots.

Per tick every due rule is evaluated, in ascending id order, against the
snapshot taken at the start of the tick.  Afterwards each rule's actions are
committed in the same order as one ``kb_apply`` transaction per rule; a
failure rolls back that rule only.  Notifications are buffered and released
after the commit that produced them.

Action terms::

    assert(F)  retract(F)  raise(E)  notify(Channel, Payload)
    add_module("file.ctr")  remove_module(id)  call(Goal)
"""
from __future__ import annotations

import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .errors import EventOrderError, KBUpdateError, SlalogError
from .events import detect, is_event_expr
from .kb import (
    AddModule,
    AssertFact,
    KnowledgeBase,
    RemoveModule,
    RetractFact,
    kb_apply,
)
from .model import ON_INGEST, EcaRule
from .solver import TRUE, Solver, SolverConfig
from .terms import (
    Compound,
    Const,
    Literal,
    Term,
    format_term,
    is_ground,
    py_value,
    resolve,
    resolve_literal,
    term_order,
    term_to_literal,
)

NARRATIVE_MODULE = "narrative"
DYNAMIC_MODULE = "dynamic"
OUTCOMES = ("error", "fired", "else-fired", "condition-miss", "event-miss")  # by precedence
_PLACEHOLDER = re.compile(r"\{([A-Z_][A-Za-z0-9_]*)\}")


def _value_text(t: Term) -> str:
    if isinstance(t, Const) and t.kind in ("sym", "str"):
        return str(t.value)
    return format_term(t)


def _bindings_json(b: tuple) -> dict:
    return {k: _json_value(v) for k, v in b}


@dataclass(frozen=True)
class TickEntry:
    t: int
    rule: str
    outcome: str
    bindings: tuple = ()  # one sorted (name, term) tuple per firing
    error: Optional[str] = None

    def as_dict(self) -> dict:
        d = {"t": self.t, "rule": self.rule, "outcome": self.outcome, "bindings": [_bindings_json(b) for b in self.bindings]}
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass(frozen=True)
class Notification:
    t: int
    rule: str
    channel: str
    payload: str

    def to_json(self) -> str:
        return json.dumps({"t": self.t, "rule": self.rule, "channel": self.channel, "payload": self.payload}, sort_keys=True)


@dataclass
class _Plan:
    rule: EcaRule
    outcome: str = "event-miss"
    fired: list = field(default_factory=list)  # (action terms, bindings, outcome)
    consumed: list = field(default_factory=list)
    error: Optional[str] = None


def render_payload(payload: Term, bindings: dict) -> str:
    if isinstance(payload, Const) and payload.kind == "str":
        def sub(m):
            v = bindings.get(m.group(1))
            return m.group(0) if v is None else _value_text(v)

        return _PLACEHOLDER.sub(sub, payload.value)
    return _value_text(resolve(payload, bindings))


class EcaEngine:
    """Owns a KB and runs ECA rules against it."""

    def __init__(
        self,
        kb: KnowledgeBase,
        rules: Optional[Sequence[EcaRule]] = None,
        *,
        tick_default: int = 1000,
        parallel: bool = False,
        config: Optional[SolverConfig] = None,
        deontic: Optional[bool] = None,
        base_dir: Optional[Path] = None,
        on_notify: Optional[Callable[[Notification], None]] = None,
        consumed: Optional[dict] = None,
    ):
        self.kb = kb
        rules = list(kb.eca_rules if rules is None else rules)
        ids = [r.id for r in rules]
        if len(set(ids)) != len(ids):
            raise KBUpdateError("duplicate ECA rule ids")
        self.rules = sorted(rules, key=lambda r: r.id)
        if tick_default < 1:
            raise ValueError("tick_default must be >= 1")
        self.tick_default = tick_default
        self.parallel = parallel
        self.config = config
        self.deontic = bool(kb.norms) if deontic is None else deontic
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.on_notify = on_notify
        self.consumed: dict = consumed if consumed is not None else {}
        self.last_tick: Optional[int] = None
        self.log: list = []
        self.notifications: list = []
        self.ticks = 0

    # -- scheduling --------------------------------------------------------

    def period(self, rule: EcaRule):
        return self.tick_default if rule.every is None else rule.every

    def due(self, now: int, ingested: bool) -> list:
        out = []
        for r in self.rules:
            p = self.period(r)
            if p == ON_INGEST:
                if ingested:
                    out.append(r)
            elif now > 0 and now % p == 0:
                out.append(r)
        return out

    # -- evaluation ----------------------------------------------------------

    def _detections(self, rule: EcaRule, snap: KnowledgeBase, solver: Solver, now: int) -> list:
        """(consumption key, bindings dict) pairs for the event part."""
        ev = rule.event
        if not ev:
            return [(None, {})]
        if len(ev) == 1 and not ev[0].naf and not ev[0].neg:
            a = ev[0].atom
            expr = None
            if a.functor == "detect" and len(a.args) == 1:
                expr = a.args[0]
            elif is_event_expr(a):
                expr = a
            if expr is not None:
                return [(("d",) + d.key, d.as_dict()) for d in detect(snap, expr, now) if d.end <= now]
        out = []
        for ans in solver.solve(ev):
            if ans.truth is TRUE:
                out.append((("q", ans.bindings), ans.as_dict()))
        return out

    def _evaluate(self, rule: EcaRule, snap: KnowledgeBase, now: int) -> _Plan:
        plan = _Plan(rule)
        seen = self.consumed.get(rule.id, set())
        try:
            solver = Solver(snap, self.config)
            dets = [(k, b) for k, b in self._detections(rule, snap, solver, now) if k is None or k not in seen]
            if not dets:
                return plan
            plan.outcome = "condition-miss"
            for key, b in dets:
                if key is not None:
                    plan.consumed.append(key)
                if rule.condition:
                    cond = [resolve_literal(l, b) for l in rule.condition]
                    answers = [dict(b, **a.as_dict()) for a in solver.solve(cond) if a.truth is TRUE]
                else:
                    answers = [b]
                if answers:
                    for s in answers:
                        plan.fired.append((rule.action, s, "fired"))
                elif rule.else_action:
                    plan.fired.append((rule.else_action, b, "else-fired"))
        except SlalogError as e:
            plan.outcome, plan.error = "error", str(e)
            plan.fired = []
            return plan
        outs = {o for _, _, o in plan.fired}
        if "fired" in outs:
            plan.outcome = "fired"
        elif "else-fired" in outs:
            plan.outcome = "else-fired"
        return plan

    # -- commit ----------------------------------------------------------------

    def _updates(self, kb: KnowledgeBase, actions: tuple, s: dict, now: int, rule_id: str, notes: list) -> list:
        ups = []
        for act in actions:
            a = resolve(act, s)
            if isinstance(a, Const) and a.kind == "sym":
                a = Compound(a.value)
            if not isinstance(a, Compound):
                raise KBUpdateError(f"invalid action {format_term(a)}")
            f, args = a.functor, a.args
            if f in ("assert", "retract", "raise", "add_module", "remove_module", "call") and len(args) != 1:
                raise KBUpdateError(f"action {f} takes one argument")
            if f in ("assert", "retract", "raise") and not is_ground(args[0]):
                raise KBUpdateError(f"action {format_term(a)} is not ground after binding")
            if f == "assert":
                ups.append(AssertFact(term_to_literal(args[0]), DYNAMIC_MODULE))
            elif f == "retract":
                lit = term_to_literal(args[0])
                owner = next((mid for mid in sorted(kb.modules) if lit in kb.modules[mid].facts), DYNAMIC_MODULE)
                ups.append(RetractFact(lit, owner))
            elif f == "raise":
                ups.append(AssertFact(Literal(Compound("happens", (args[0], Const(now, "int")))), NARRATIVE_MODULE))
            elif f == "notify" and len(args) == 2:
                notes.append(Notification(now, rule_id, _value_text(args[0]), render_payload(act.args[1], s)))
            elif f == "add_module":
                from .lang.loader import read_program

                path = args[0].value if isinstance(args[0], Const) else format_term(args[0])
                p = Path(path)
                ups.append(AddModule(read_program(p if p.is_absolute() else self.base_dir / p).module))
            elif f == "remove_module":
                ups.append(RemoveModule(_value_text(args[0])))
            elif f == "call":
                goal = term_to_literal(args[0])
                if not any(x.truth is TRUE for x in Solver(kb, self.config).solve([goal])):
                    raise KBUpdateError(f"call({format_term(args[0])}) failed")
            else:
                raise KBUpdateError(f"unknown action {format_term(a)}")
        return ups

    def _commit(self, kb: KnowledgeBase, plan: _Plan, now: int):
        notes: list = []
        ups: list = []
        for actions, s, _ in plan.fired:
            ups.extend(self._updates(kb, actions, s, now, plan.rule.id, notes))
        if ups:
            kb = kb_apply(kb, ups)[0]
        return kb, notes

    def tick(self, now: int, rules: Optional[Sequence[EcaRule]] = None) -> list:
        if self.last_tick is not None and now <= self.last_tick:
            raise ValueError(f"tick at {now} does not advance past {self.last_tick}")
        self.last_tick = now
        self.ticks += 1
        rules = sorted(self.rules if rules is None else rules, key=lambda r: r.id)
        snap = self.kb
        if self.parallel and len(rules) > 1:
            with ThreadPoolExecutor() as pool:
                plans = list(pool.map(lambda r: self._evaluate(r, snap, now), rules))
        else:
            plans = [self._evaluate(r, snap, now) for r in rules]
        kb = snap
        entries = []
        changed = False
        for plan in plans:
            rid = plan.rule.id
            if plan.consumed:
                self.consumed.setdefault(rid, set()).update(plan.consumed)
            if plan.error is not None:
                entries.append(TickEntry(now, rid, "error", (), plan.error))
                continue
            if not plan.fired:
                entries.append(TickEntry(now, rid, plan.outcome))
                continue
            try:
                new_kb, notes = self._commit(kb, plan, now)
            except (SlalogError, ValueError, TypeError, OSError) as e:
                entries.append(TickEntry(now, rid, "error", (), str(e)))
                continue
            changed = changed or new_kb is not kb
            kb = new_kb
            for n in notes:
                self.notifications.append(n)
                if self.on_notify is not None:
                    self.on_notify(n)
            bindings = tuple(sorted({tuple(sorted(s.items())) for _, s, _ in plan.fired}, key=_bkey))
            entries.append(TickEntry(now, rid, plan.outcome, bindings))
        if changed and self.deontic:
            kb = self._refresh(kb, now)
        self.kb = kb
        self.log.extend(entries)
        return entries

    def _refresh(self, kb: KnowledgeBase, upto: int) -> KnowledgeBase:
        from .deontic import with_deontic

        return with_deontic(kb, upto, self.config)

    # -- driving a whole run -----------------------------------------------------

    def ingest(self, t: int, events: Sequence[Term]) -> None:
        if not events:
            return
        ups = [AssertFact(Literal(Compound("happens", (e, Const(t, "int")))), NARRATIVE_MODULE) for e in events]
        kb = kb_apply(self.kb, ups)[0]
        if self.deontic:
            kb = self._refresh(kb, t)
        self.kb = kb

    def run(self, events: Iterable[tuple], horizon: int, tolerate: int = 0) -> "RunResult":
        events = order_events(events, tolerate)
        batches: dict = {}
        ignored = 0
        for t, e in events:
            if t > horizon:
                ignored += 1
            else:
                batches.setdefault(t, []).append(e)
        times = set(batches)
        for r in self.rules:
            p = self.period(r)
            if p != ON_INGEST:
                times.update(range(p, horizon + 1, p))
        if self.deontic:
            self.kb = self._refresh(self.kb, 0)
        latencies = []
        ingested = 0
        for now in sorted(times):
            t0 = time.perf_counter()
            batch = batches.get(now, [])
            self.ingest(now, batch)
            ingested += len(batch)
            due = self.due(now, bool(batch))
            if due:
                self.tick(now, due)
            if batch:
                dt = (time.perf_counter() - t0) * 1000.0
                latencies.extend([dt / len(batch)] * len(batch))
        if self.deontic:
            self.kb = self._refresh(self.kb, horizon)
        return RunResult(self, horizon, ingested, ignored, latencies)


def _bkey(b: tuple):
    return tuple((k, term_order(v)) for k, v in b)


def order_events(events: Iterable[tuple], tolerate: int = 0) -> list:
    """Validate timestamps; regressions beyond ``tolerate`` ms raise EventOrderError."""
    out = []
    latest = None
    for pos, (t, e) in enumerate(events, 1):
        if not isinstance(t, int) or isinstance(t, bool) or t < 0:
            raise EventOrderError(f"event {pos}: timestamp must be a non-negative integer, got {t!r}", pos)
        if latest is not None and t < latest - tolerate:
            raise EventOrderError(f"event {pos}: timestamp {t} is earlier than {latest}", pos)
        latest = t if latest is None else max(latest, t)
        out.append((t, e))
    out.sort(key=lambda x: x[0])  # stable: equal timestamps keep stream order
    return out


@dataclass
class RunResult:
    engine: EcaEngine
    horizon: int
    events_ingested: int
    events_ignored: int
    latencies_ms: list

    @property
    def kb(self) -> KnowledgeBase:
        return self.engine.kb

    @property
    def log(self) -> list:
        return self.engine.log

    def report(self, contract: str = "main", include_latency: bool = False) -> dict:
        from .deontic import norm_state, violations

        kb = self.kb
        eng = self.engine
        norms = {}
        viols = []
        if kb.norms:
            viols = violations(kb, self.horizon, refresh=False, config=eng.config)
            for n in sorted(kb.norms, key=lambda n: n.id):
                st = norm_state(kb, n.id, self.horizon, refresh=False, config=eng.config)
                norms[n.id] = {"state": st.state, "since": st.since}
        penalties = []
        if kb.defines("penalty", 3):
            q = Literal(Compound("penalty", tuple(_vars(3))))
            for a in Solver(kb, eng.config).solve([q]):
                if a.truth is TRUE:
                    penalties.append([_json_value(a[f"P{i}"]) for i in range(3)])
        rep = {
            "contract": contract,
            "horizon": self.horizon,
            "events_ingested": self.events_ingested,
            "events_ignored": self.events_ignored,
            "ticks": eng.ticks,
            "fired_actions": [e.as_dict() for e in eng.log if e.outcome in ("fired", "else-fired")],
            "errors": [e.as_dict() for e in eng.log if e.outcome == "error"],
            "violations": [{"norm": n, "time": t} for n, t in viols],
            "penalties": penalties,
            "norms": norms,
            "notifications": len(eng.notifications),
        }
        if include_latency:
            rep["latency_ms"] = latency_stats(self.latencies_ms)
        return rep


def _vars(n: int):
    from .terms import Var

    return [Var(f"P{i}") for i in range(n)]


def _json_value(t: Term):
    v = py_value(t)
    return v if isinstance(v, (int, float, str)) else format_term(t)


def latency_stats(values: Sequence[float]) -> dict:
    if not values:
        return {"count": 0, "min": None, "mean": None, "max": None}
    return {
        "count": len(values),
        "min": round(min(values), 3),
        "mean": round(sum(values) / len(values), 3),
        "max": round(max(values), 3),
    }


def tick(kb: KnowledgeBase, rules: Sequence[EcaRule], now: int, consumed: Optional[dict] = None, **kw):
    """One tick over ``rules``; pass the same ``consumed`` dict across calls."""
    eng = EcaEngine(kb, rules, deontic=kw.pop("deontic", False), consumed=consumed, **kw)
    entries = eng.tick(now)
    return eng.kb, entries


def run(kb: KnowledgeBase, rules: Optional[Sequence[EcaRule]], events: Iterable[tuple], horizon: int, **kw) -> RunResult:
    tolerate = kw.pop("tolerate", 0)
    return EcaEngine(kb, rules, **kw).run(events, horizon, tolerate)
