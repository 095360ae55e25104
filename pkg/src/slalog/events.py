"""Interval-based complex-event algebra over the narrative.

Expressions are plain terms::

    seq(A, B)        B after A (A ends no later than B starts)
    both(A, B)       A and B in either order
    either(A, B)     A or B
    absent(A, W)     no A inside window W
    times(A, N, W)   N occurrences of A inside W

A window is ``window(Lo, Hi)`` or ``[Lo, Hi]`` (absolute, inclusive) or an
integer duration.  For ``absent`` a duration means tumbling windows
[0, d], (d, 2d], ...; for ``times`` it is a sliding span ending at the newest
occurrence.  Any other term is a primitive event pattern matched against
``happens/2`` facts.

Each operator node consumes an occurrence at most once and pairs a new
occurrence with the newest compatible unconsumed partner.
"""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .errors import SlalogError
from .kb import KnowledgeBase
from .terms import Compound, Const, Term, Var, format_term, match_into, resolve, term_order

OPERATORS = {("seq", 2), ("both", 2), ("either", 2), ("absent", 2), ("times", 3)}


class EventExprError(SlalogError):
    pass


@dataclass(frozen=True)
class Detection:
    expr: Term
    start: int
    end: int
    bindings: tuple  # sorted (name, term) pairs
    parts: tuple  # contributing (time, k, event) occurrences; k tells identical ones apart

    @property
    def time(self) -> int:
        return self.end

    @property
    def key(self) -> tuple:
        return (self.start, self.end, self.bindings, self.parts)

    def as_dict(self) -> dict:
        return dict(self.bindings)


@dataclass(frozen=True)
class _Occ:
    start: int
    end: int
    s: tuple  # bindings
    parts: frozenset


def is_event_expr(t: Term) -> bool:
    return isinstance(t, Compound) and (t.functor, len(t.args)) in OPERATORS


def _int(t: Term, what: str) -> int:
    if isinstance(t, Const) and t.kind == "int":
        return t.value
    raise EventExprError(f"{what} must be an integer, got {format_term(t)}")


def _window(w: Term):
    """(lo, hi) for absolute windows, int for durations."""
    if isinstance(w, Compound) and w.functor in ("window", "[]") and len(w.args) == 2:
        lo, hi = _int(w.args[0], "window bound"), _int(w.args[1], "window bound")
        if lo > hi:
            raise EventExprError(f"window {format_term(w)} has lo > hi")
        return (lo, hi)
    d = _int(w, "window")
    if d < 1:
        raise EventExprError(f"window duration must be positive, got {d}")
    return d


def validate(expr: Term) -> None:
    if not is_event_expr(expr):
        return
    f, args = expr.functor, expr.args
    if f in ("seq", "both", "either"):
        validate(args[0])
        validate(args[1])
    elif f == "absent":
        validate(args[0])
        _window(args[1])
    else:
        validate(args[0])
        if _int(args[1], "times count") < 1:
            raise EventExprError("times count must be >= 1")
        _window(args[2])


def _merge(a: tuple, b: tuple) -> Optional[tuple]:
    s = dict(a)
    for k, v in b:
        if k in s:
            if s[k] != v:
                return None
        else:
            s[k] = v
    return tuple(sorted(s.items()))


def _order(o: _Occ):
    return (o.end, o.start, tuple(sorted((p[0], term_order(p[2]), p[1]) for p in o.parts)))


def _key(t: Term):
    return (t.functor, len(t.args)) if isinstance(t, Compound) else t


class _Eval:
    def __init__(self, narrative: Sequence[tuple], upto: Optional[int]):
        self.upto = upto
        # (time, k, event): k numbers identical (time, event) pairs, so ids stay
        # stable when later events are appended to the narrative
        seen: dict = {}
        self.events = []
        self.by_key: dict = {}  # (functor, arity) -> events, for primitive lookups
        for t, e in narrative:
            if upto is not None and t > upto:
                continue
            k = seen.get((t, e), 0)
            seen[(t, e)] = k + 1
            self.events.append((t, k, e))
            self.by_key.setdefault(_key(e), []).append((t, k, e))

    def occ(self, expr: Term) -> list:
        if not is_event_expr(expr):
            return self.prim(expr)
        f = expr.functor
        if f == "seq":
            return self.seq(self.occ(expr.args[0]), self.occ(expr.args[1]))
        if f == "both":
            return self.both(self.occ(expr.args[0]), self.occ(expr.args[1]))
        if f == "either":
            return sorted(self.occ(expr.args[0]) + self.occ(expr.args[1]), key=_order)
        if f == "absent":
            return self.absent(expr.args[0], _window(expr.args[1]))
        n = _int(expr.args[1], "times count")
        if n < 1:
            raise EventExprError("times count must be >= 1")
        return self.times(self.occ(expr.args[0]), n, _window(expr.args[2]))

    def prim(self, pattern: Term) -> list:
        out = []
        pool = self.events if isinstance(pattern, Var) else self.by_key.get(_key(pattern), ())
        for t, k, e in pool:
            s: dict = {}
            if match_into(pattern, e, s):
                b = tuple(sorted((n, resolve(v, s)) for n, v in s.items()))
                out.append(_Occ(t, t, b, frozenset([(t, k, e)])))
        return out

    def seq(self, first: list, second: list) -> list:
        used: set = set()
        out = []
        for b in sorted(second, key=_order):
            best = None
            for idx, a in enumerate(first):
                if idx in used or a.end > b.start or a.parts & b.parts:
                    continue
                if _merge(a.s, b.s) is None:
                    continue
                if best is None or _order(a) >= _order(first[best]):
                    best = idx
            if best is not None:
                used.add(best)
                a = first[best]
                out.append(_Occ(a.start, b.end, _merge(a.s, b.s), a.parts | b.parts))
        return out

    def both(self, left: list, right: list) -> list:
        stream = [(o, 0, i) for i, o in enumerate(left)] + [(o, 1, i) for i, o in enumerate(right)]
        stream.sort(key=lambda x: (_order(x[0]), x[1], x[2]))
        waiting: list = [[], []]  # unconsumed occurrences per side, in arrival order
        out = []
        for o, side, _ in stream:
            other = waiting[1 - side]
            best = None
            for j in range(len(other) - 1, -1, -1):
                p = other[j]
                if p.parts & o.parts or _merge(p.s, o.s) is None:
                    continue
                best = j
                break
            if best is None:
                waiting[side].append(o)
                continue
            p = other.pop(best)
            out.append(_Occ(min(p.start, o.start), max(p.end, o.end), _merge(p.s, o.s), p.parts | o.parts))
        return out

    def absent(self, inner: Term, window) -> list:
        occs = self.occ(inner)
        if isinstance(window, tuple):
            spans = [window]
        else:
            if self.upto is None:
                raise EventExprError("relative absent window needs an explicit 'upto'")
            spans = []
            k = 0
            while (k + 1) * window <= self.upto:
                spans.append((0 if k == 0 else k * window + 1, (k + 1) * window))
                k += 1
        out = []
        for lo, hi in spans:
            if self.upto is not None and hi > self.upto:
                continue
            if not any(lo <= o.start and o.end <= hi for o in occs):
                out.append(_Occ(lo, hi, (), frozenset()))
        return out

    def times(self, occs: list, n: int, window) -> list:
        pool: list = []
        out = []
        for o in sorted(occs, key=_order):
            if isinstance(window, tuple):
                lo, hi = window
                if o.start < lo or o.end > hi:
                    continue
            else:
                lo = o.end - window
            chosen = [o]
            s = o.s
            for p in reversed(pool):
                if len(chosen) == n:
                    break
                if p.start < lo or p.parts & frozenset().union(*(c.parts for c in chosen)):
                    continue
                m = _merge(s, p.s)
                if m is None:
                    continue
                chosen.append(p)
                s = m
            if len(chosen) == n:
                for p in chosen[1:]:
                    pool.remove(p)
                parts = frozenset().union(*(c.parts for c in chosen))
                out.append(_Occ(min(c.start for c in chosen), o.end, s, parts))
            else:
                pool.append(o)
        return out


_CACHE: "OrderedDict[tuple, tuple]" = OrderedDict()
_LOCK = threading.Lock()


def _evaluator(narrative: tuple, upto: Optional[int]) -> _Eval:
    # norm refreshes call detect many times against one narrative; the
    # evaluator is read-only once built, so share it.  The cached entry keeps
    # the narrative alive, so its id cannot be reused while cached.
    key = (id(narrative), upto)
    with _LOCK:
        hit = _CACHE.get(key)
        if hit is not None and hit[0] is narrative:
            _CACHE.move_to_end(key)
            return hit[1]
    ev = _Eval(narrative, upto)
    with _LOCK:
        _CACHE[key] = (narrative, ev)
        if len(_CACHE) > 32:
            _CACHE.popitem(last=False)
    return ev


def detect(source: Union[KnowledgeBase, Sequence[tuple]], expr: Term, upto: Optional[int] = None) -> list:
    """Detections of ``expr`` with end <= ``upto`` (all of them if ``upto`` is None).

    ``source`` is a KB (its ``happens/2`` facts) or a sequence of (time, event).
    """
    validate(expr)
    narrative = source.narrative if isinstance(source, KnowledgeBase) else tuple(source)
    ev = _evaluator(narrative, upto)
    out = []
    for o in ev.occ(expr):
        if upto is not None and o.end > upto:
            continue
        parts = tuple(sorted(o.parts, key=lambda p: (p[0], term_order(p[2]), p[1])))
        out.append(Detection(expr, o.start, o.end, o.s, parts))
    out.sort(key=lambda d: (d.end, d.start, tuple(term_order(v) for _, v in d.bindings), tuple((p[0], term_order(p[2]), p[1]) for p in d.parts)))
    return out
