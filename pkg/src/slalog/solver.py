"""Goal-directed tabled resolution computing the well-founded model.

Evaluation runs in two phases.

1. Tabled resolution: every call is memoized by its variant; consumers of a
   table are resumed whenever it gains an answer, so left recursion and
   positive loops terminate without special handling.  Ground default-negated
   literals are called (to table their atom) but answered optimistically; the
   ground clause instance used for each derivation is recorded.
2. The recorded residual program (clause instances over answer nodes) is
   settled by an SCC-ordered alternating fixpoint, which assigns each answer
   True, Undefined or False.

Explicit negation ``neg p`` is an independent predicate.  Attachments are
called when their input-mode arguments are ground and are never tabled.
"""
from __future__ import annotations

import enum
import os
import sys
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import InstantiationError, ResourceError
from .kb import KnowledgeBase, check_query_safety
from .terms import (
    Compound,
    Literal,
    Renamer,
    Term,
    Var,
    format_literal,
    format_substitution,
    is_ground,
    literal_vars,
    match_into,
    resolve,
    term_depth,
    term_order,
    unify_into,
    variant_key,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))


class TruthValue(enum.Enum):
    TRUE = "true"
    UNDEFINED = "undefined"
    FALSE = "false"

    def complement(self) -> "TruthValue":
        if self is TruthValue.TRUE:
            return TruthValue.FALSE
        if self is TruthValue.FALSE:
            return TruthValue.TRUE
        return TruthValue.UNDEFINED

    def __str__(self) -> str:
        return self.value


TRUE, UNDEFINED, FALSE = TruthValue.TRUE, TruthValue.UNDEFINED, TruthValue.FALSE


def _default_budget() -> int:
    env = os.environ.get("SLALOG_STEP_BUDGET")
    return int(env) if env else 1_000_000


@dataclass
class SolverConfig:
    step_budget: int = field(default_factory=_default_budget)
    depth_bound: int = 512
    occurs_check: bool = True


@dataclass(frozen=True)
class Answer:
    bindings: tuple  # sorted (name, Term) pairs for the query variables
    truth: TruthValue = TRUE

    def as_dict(self) -> dict:
        return dict(self.bindings)

    def __getitem__(self, name: str) -> Term:
        return self.as_dict()[name]

    def __str__(self) -> str:
        return f"{format_substitution(self.as_dict())} ({self.truth})"


@dataclass
class SolveStats:
    steps: int = 0
    tables: int = 0
    answers: int = 0
    residual_clauses: int = 0


class _Table:
    __slots__ = ("key", "goal", "neg", "answers", "consumers")

    def __init__(self, key, goal: Compound, neg: bool):
        self.key = key
        self.goal = goal
        self.neg = neg
        self.answers: dict = {}  # variant key -> (atom, node id)
        self.consumers: list = []  # (continuation, body index)


# A continuation is (table, head atom, body tuple, positive nodes, negative nodes);
# everything in it is already instantiated, so no substitution travels along.

_EXPAND, _CONT, _ANSWER = 0, 1, 2


class Solver:
    """One evaluation context over a KB snapshot; memo tables live per call."""

    def __init__(self, kb: KnowledgeBase, config: Optional[SolverConfig] = None):
        self.kb = kb
        self.config = config or SolverConfig()
        self.stats = SolveStats()
        self.last_tables = 0
        self.last_answers = 0

    # -- public API ------------------------------------------------------

    def solve(self, query: Sequence[Literal]) -> list[Answer]:
        query = tuple(query)
        check_query_safety(query)
        qvars = list(literal_vars(query).values())
        run = _Run(self.kb, self.config)
        head = Compound("$query", tuple(qvars))
        qtable = run.query_table(head, query)
        run.drain()
        truth = run.settle()
        self.stats.steps += run.steps
        self.stats.tables = max(self.stats.tables, len(run.tables))
        self.stats.answers = max(self.stats.answers, run.answer_count)
        self.stats.residual_clauses = max(self.stats.residual_clauses, len(run.clauses))
        self.last_tables = len(run.tables)
        self.last_answers = run.answer_count
        out = set()
        for atom, node in qtable.answers.values():
            tv = truth[node]
            if tv is FALSE:
                continue
            pairs = tuple(sorted((v.name, a) for v, a in zip(qvars, atom.args)))
            out.add(Answer(pairs, tv))
        return sorted(out, key=_answer_order)

    def truth_of(self, lit: Literal) -> TruthValue:
        if not is_ground(lit.atom):
            raise InstantiationError(f"truth_of needs a ground literal, got {format_literal(lit)}")
        if lit.naf:
            return self.truth_of(lit.positive()).complement()
        answers = self.solve([lit])
        if not answers:
            return FALSE
        return answers[0].truth


def _answer_order(a: Answer):
    return (tuple((n, term_order(t)) for n, t in a.bindings), a.truth.value)


class _Run:
    def __init__(self, kb: KnowledgeBase, config: SolverConfig):
        self.kb = kb
        self.index = kb.index
        self.attachments = kb.attachments
        self.types = kb.types
        self.config = config
        self.renamer = Renamer()
        self.tables: dict = {}
        self.nodes: dict = {}  # (table key, answer key) -> node id
        self.clauses: list = []  # (head node, pos nodes, neg nodes)
        self.work: deque = deque()
        self.steps = 0
        self.answer_count = 0

    # -- tables and nodes ------------------------------------------------

    def node(self, tkey, akey) -> int:
        k = (tkey, akey)
        n = self.nodes.get(k)
        if n is None:
            n = self.nodes[k] = len(self.nodes)
        return n

    def table(self, goal: Compound, neg: bool) -> _Table:
        key = (neg, variant_key(goal))
        t = self.tables.get(key)
        if t is None:
            if term_depth(goal) > self.config.depth_bound:
                raise ResourceError(f"goal depth exceeds bound {self.config.depth_bound}")
            t = self.tables[key] = _Table(key, goal, neg)
            self.work.append((_EXPAND, t))
        return t

    def query_table(self, head: Compound, body: tuple) -> _Table:
        t = _Table(("$query",), head, False)
        self.tables[t.key] = t
        self.work.append((_CONT, (t, head, body, (), ())))
        return t

    # -- worklist --------------------------------------------------------

    def drain(self) -> None:
        budget = self.config.step_budget
        work = self.work
        while work:
            self.steps += 1
            if self.steps > budget:
                raise ResourceError(f"resolution step budget of {budget} exceeded")
            kind, payload = work.popleft()
            if kind == _CONT:
                self.step(payload)
            elif kind == _ANSWER:
                self.resume(*payload)
            else:
                self.expand(payload)

    def expand(self, table: _Table) -> None:
        goal = table.goal
        clauses = self.index.get((goal.functor, len(goal.args), table.neg), ())
        types, oc = self.types, self.config.occurs_check
        for rule in clauses:
            mapping: dict = {}
            head = self.renamer.rename(rule.head.atom, mapping)
            s: dict = {}
            if not unify_into(head, goal, s, types, oc):
                continue
            if rule.body:
                body = tuple(
                    Literal(resolve(self.renamer.rename(b.atom, mapping), s), b.neg, b.naf) for b in rule.body
                )
            else:
                body = ()
            self.work.append((_CONT, (table, resolve(head, s), body, (), ())))

    def step(self, cont) -> None:
        table, head, body, pos, negs = cont
        if not body:
            self.add_answer(table, head, pos, negs)
            return
        i = self.select(body)
        lit = body[i]
        rest = body[:i] + body[i + 1 :]
        a = lit.atom
        if a.functor == "=" and len(a.args) == 2 and not lit.neg:
            s: dict = {}
            ok = unify_into(a.args[0], a.args[1], s, self.types, self.config.occurs_check)
            if lit.naf:
                if not ok:
                    self.work.append((_CONT, (table, head, rest, pos, negs)))
            elif ok:
                self.push_bound(table, head, rest, pos, negs, s)
            return
        att = None if lit.neg else self.attachments.get(a.functor, len(a.args))
        if att is not None:
            results = att.call(a.args)
            if lit.naf:
                if not results:
                    self.work.append((_CONT, (table, head, rest, pos, negs)))
                return
            outs = [x for x, m in zip(a.args, att.modes) if m == "out"]
            for row in results:
                s = {}
                if all(unify_into(x, y, s, self.types, self.config.occurs_check) for x, y in zip(outs, row)):
                    self.push_bound(table, head, rest, pos, negs, s)
            return
        if lit.naf:
            callee = self.table(a, lit.neg)
            n = self.node(callee.key, a)
            self.work.append((_CONT, (table, head, rest, pos, negs + (n,))))
            return
        callee = self.table(a, lit.neg)
        callee.consumers.append(((table, head, body, pos, negs), i))
        for atom, node in list(callee.answers.values()):
            self.work.append((_ANSWER, ((table, head, body, pos, negs), i, atom, node)))

    def select(self, body: tuple) -> int:
        """Leftmost literal that can be evaluated safely right now."""
        for i, lit in enumerate(body):
            a = lit.atom
            if a.functor == "=" and len(a.args) == 2 and not lit.neg:
                if not lit.naf or is_ground(a):
                    return i
                continue
            att = None if lit.neg else self.attachments.get(a.functor, len(a.args))
            if att is not None:
                if all(m == "out" or is_ground(x) for x, m in zip(a.args, att.modes)):
                    if not lit.naf or is_ground(a):
                        return i
                continue
            if lit.naf:
                if is_ground(a):
                    return i
                continue
            return i
        for lit in body:
            att = None if lit.neg else self.attachments.get(lit.atom.functor, len(lit.atom.args))
            if att is not None:
                att.call(lit.atom.args)  # raises the mode-violation error
        shown = ", ".join(format_literal(b) for b in body)
        raise InstantiationError(f"floundering: no literal of '{shown}' is sufficiently instantiated")

    def push_bound(self, table, head, rest, pos, negs, s) -> None:
        if s:
            head = resolve(head, s)
            rest = tuple(Literal(resolve(b.atom, s), b.neg, b.naf) for b in rest)
        self.work.append((_CONT, (table, head, rest, pos, negs)))

    def resume(self, cont, i: int, answer: Compound, node: int) -> None:
        table, head, body, pos, negs = cont
        lit = body[i]
        if not is_ground(answer):
            answer = self.renamer.rename(answer, {})
        s: dict = {}
        if not match_into(lit.atom, answer, s):
            return
        rest = body[:i] + body[i + 1 :]
        self.push_bound(table, head, rest, pos + (node,), negs, s)

    def add_answer(self, table: _Table, atom: Compound, pos: tuple, negs: tuple) -> None:
        akey = variant_key(atom)
        entry = table.answers.get(akey)
        if entry is None:
            if term_depth(atom) > self.config.depth_bound:
                raise ResourceError(f"answer depth exceeds bound {self.config.depth_bound}")
            node = self.node(table.key, akey)
            table.answers[akey] = (atom, node)
            self.answer_count += 1
            for cont, i in table.consumers:
                self.work.append((_ANSWER, (cont, i, atom, node)))
        else:
            node = entry[1]
        self.clauses.append((node, pos, negs))

    # -- residual program ------------------------------------------------

    def settle(self) -> list:
        return residual_wfs(len(self.nodes), self.clauses)


def residual_wfs(n: int, clauses: list) -> list:
    """Well-founded model of a ground program over atoms ``0..n-1``.

    ``clauses`` holds (head, positive body atoms, negative body atoms).
    Strongly connected components are settled bottom-up; only components
    with internal negative dependencies need more than one pass.
    """
    by_head: list = [[] for _ in range(n)]
    for c in clauses:
        by_head[c[0]].append(c)
    succ: list = [None] * n
    for h in range(n):
        deps = set()
        for _, p, q in by_head[h]:
            deps.update(p)
            deps.update(q)
        succ[h] = deps
    value: list = [None] * n
    for comp in _tarjan(n, succ):
        _settle_component(comp, by_head, value)
    return value


def _tarjan(n: int, succ: list) -> list:
    """Iterative Tarjan; yields SCCs with dependencies before dependents."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list = []
    out: list = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _settle_component(comp: list, by_head: list, value: list) -> None:
    members = set(comp)
    # simplify clauses against already settled atoms outside the component
    local = []  # (head, internal pos, internal neg, depends on an undefined external)
    for h in comp:
        for _, pos, neg in by_head[h]:
            ipos, ineg, undef, dead = [], [], False, False
            for a in pos:
                if a in members:
                    ipos.append(a)
                else:
                    v = value[a]
                    if v is FALSE:
                        dead = True
                        break
                    if v is UNDEFINED:
                        undef = True
            if dead:
                continue
            for a in neg:
                if a in members:
                    ineg.append(a)
                else:
                    v = value[a]
                    if v is TRUE:
                        dead = True
                        break
                    if v is UNDEFINED:
                        undef = True
            if not dead:
                local.append((h, ipos, ineg, undef))
    if not local:
        for h in comp:
            value[h] = FALSE
        return
    has_internal_neg = any(c[2] for c in local)
    if not has_internal_neg:
        low = _least_model(local, members, None, optimistic=False)
        high = _least_model(local, members, None, optimistic=True)
    else:
        low: set = set()
        high = _least_model(local, members, low, optimistic=True)
        while True:
            new_low = _least_model(local, members, high, optimistic=False)
            new_high = _least_model(local, members, new_low, optimistic=True)
            if new_low == low and new_high == high:
                break
            low, high = new_low, new_high
    for h in comp:
        value[h] = TRUE if h in low else (UNDEFINED if h in high else FALSE)


def _least_model(local: list, members: set, assumed: Optional[set], optimistic: bool) -> set:
    """Least model where ``not a`` holds iff ``a`` is outside ``assumed``.

    Clauses relying on undefined external atoms only count when optimistic.
    """
    count = []
    watch: dict = {}
    ready = []
    for ci, (h, pos, neg, undef) in enumerate(local):
        live = (optimistic or not undef) and not (assumed and any(a in assumed for a in neg))
        count.append(len(pos) if live else -1)
        if not live:
            continue
        if not pos:
            ready.append(h)
        for a in pos:
            watch.setdefault(a, []).append(ci)
    model: set = set()
    while ready:
        a = ready.pop()
        if a in model:
            continue
        model.add(a)
        for ci in watch.get(a, ()):
            count[ci] -= 1
            if count[ci] == 0:
                ready.append(local[ci][0])
    return model


# ---------------------------------------------------------------------------
# module-level conveniences


def solve(kb: KnowledgeBase, query: Sequence[Literal], config: Optional[SolverConfig] = None) -> list[Answer]:
    return Solver(kb, config).solve(query)


def truth_of(kb: KnowledgeBase, lit: Literal, config: Optional[SolverConfig] = None) -> TruthValue:
    return Solver(kb, config).truth_of(lit)


def query_truth(answers: Iterable[Answer]) -> TruthValue:
    """Truth of an existentially read query given its answers."""
    best = FALSE
    for a in answers:
        if a.truth is TRUE:
            return TRUE
        best = UNDEFINED
    return best


def check_consistency(kb: KnowledgeBase, config: Optional[SolverConfig] = None) -> list[Compound]:
    """Atoms A such that both A and ``neg A`` are True in the well-founded model."""
    solver = Solver(kb, config)
    keys = {(f, n) for (f, n, neg) in kb.index if neg and (f, n, False) in kb.index}
    witnesses = set()
    for functor, arity in sorted(keys):
        vars_ = tuple(Var(f"A{i}") for i in range(arity))
        goal = Compound(functor, vars_)
        pos = [a for a in solver.solve([Literal(goal)]) if a.truth is TRUE]
        neg = [a for a in solver.solve([Literal(goal, neg=True)]) if a.truth is TRUE]
        for p in pos:
            pa = resolve(goal, p.as_dict())
            for q in neg:
                qa = Renamer("_C").rename(resolve(goal, q.as_dict()), {})
                s: dict = {}
                if unify_into(pa, qa, s):
                    witnesses.add(resolve(pa, s))
    return sorted(witnesses, key=term_order)
