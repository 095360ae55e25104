import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slalog.ec import holds_at, holds_in, simulate_timeline, with_ec
from slalog.errors import InstantiationError
from slalog.events import EventExprError, detect
from slalog.lang.parser import parse_query, parse_term
from slalog.solver import TRUE, Solver
from slalog.terms import Compound, Const, Var, sym

from helpers import kb_of
from oracles import ec_holds, seq_pairs

LIGHT = "happens(on, 2). initiates(on, light, T)."


def test_light_examples():
    kb = kb_of(LIGHT)
    assert holds_at(kb, sym("light"), 5) is TRUE
    assert str(holds_at(kb, sym("light"), 2)) == "false"
    kb = kb_of(LIGHT + " happens(off, 7). terminates(off, light, T).")
    assert str(holds_at(kb, sym("light"), 9)) == "false"
    assert [t for t in range(0, 10) if holds_at(kb, sym("light"), t) is TRUE] == [3, 4, 5, 6, 7]
    assert holds_at(kb_of("initially(light)."), sym("light"), 0) is TRUE


def test_simulate_timeline_examples():
    light = sym("light")
    ini = [(sym("on"), light)]
    ter = [(sym("off"), light)]
    assert simulate_timeline([(2, sym("on")), (7, sym("off"))], ini, ter) == {light: [(2, 7)]}
    assert simulate_timeline([], ini, ter) == {}
    assert simulate_timeline([(2, sym("on")), (4, sym("on")), (7, sym("off"))], ini, ter) == {light: [(2, 7)]}
    assert simulate_timeline([], ini, ter, initially=[light]) == {light: [(-1, None)]}
    assert holds_in([(2, 7)], 7) and not holds_in([(2, 7)], 2)


def test_simulate_timeline_rejects_nonground_effects():
    with pytest.raises(InstantiationError):
        simulate_timeline([(1, sym("go"))], [(sym("go"), Compound("at", (Var("Where"),)))])


def test_terminate_wins_at_same_instant():
    kb = kb_of("happens(on, 2). happens(on, 5). happens(off, 5). initiates(on, light, T). terminates(off, light, T).")
    truth = {t: holds_at(kb, sym("light"), t) is TRUE for t in range(0, 9)}
    assert truth == {0: False, 1: False, 2: False, 3: True, 4: True, 5: True, 6: False, 7: False, 8: False}
    tl = simulate_timeline([(2, sym("on")), (5, sym("on")), (5, sym("off"))], [(sym("on"), sym("light"))], [(sym("off"), sym("light"))])
    assert tl == {sym("light"): [(2, 5)]}


def _random_narrative(rng):
    fluents = [f"f{i}" for i in range(rng.randint(1, 5))]
    events = [f"e{i}" for i in range(rng.randint(1, 6))]
    ini = {e: set(rng.sample(fluents, rng.randint(0, min(2, len(fluents))))) for e in events}
    ter = {e: set(rng.sample(fluents, rng.randint(0, min(2, len(fluents))))) for e in events}
    initially = set(rng.sample(fluents, rng.randint(0, len(fluents))))
    narrative = sorted((rng.randint(0, 60), rng.choice(events)) for _ in range(rng.randint(0, 50)))
    return fluents, narrative, ini, ter, initially


def _kb(narrative, ini, ter, initially, probes=()):
    lines = [f"happens({e}, {t})." for t, e in narrative]
    lines += [f"probe({t})." for t in probes]
    lines += [f"initiates({e}, {f}, T)." for e, fs in ini.items() for f in sorted(fs)]
    lines += [f"terminates({e}, {f}, T)." for e, fs in ter.items() for f in sorted(fs)]
    lines += [f"initially({f})." for f in sorted(initially)]
    lines.append("known(x).")
    return with_ec(kb_of("\n".join(lines)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_holds_at_matches_timeline_and_definition(seed):
    rng = random.Random(seed)
    fluents, narrative, ini, ter, initially = _random_narrative(rng)
    probes = sorted({p for t, _ in narrative for p in (t - 1, t, t + 1) if p >= 0} | {0})
    kb = _kb(narrative, ini, ter, initially, probes)
    tl = simulate_timeline(
        [(t, sym(e)) for t, e in narrative],
        [(sym(e), sym(f)) for e, fs in ini.items() for f in fs],
        [(sym(e), sym(f)) for e, fs in ter.items() for f in fs],
        [sym(f) for f in initially],
    )
    held = {(a["F"].value, a["T"].value) for a in Solver(kb).solve(parse_query("probe(T), holds_at(F, T)")) if a.truth is TRUE}
    for t in probes:
        got = {f for f, t2 in held if t2 == t}
        for f in fluents:
            assert (f in got) == holds_in(tl.get(sym(f), []), t)
            assert (f in got) == ec_holds(f, t, narrative, ini, ter, initially)


# -- event algebra ----------------------------------------------------------


def nar(*pairs):
    return [(t, sym(e) if isinstance(e, str) else e) for t, e in pairs]


def spans(dets):
    return [(d.start, d.end) for d in dets]


def test_algebra_examples():
    assert spans(detect(nar((1, "a"), (3, "b")), parse_term("seq(a, b)"))) == [(1, 3)]
    assert spans(detect(nar((3, "a"), (1, "b")), parse_term("both(a, b)"))) == [(1, 3)]
    assert spans(detect([], parse_term("absent(ping_ok, [0, 5000])"))) == [(0, 5000)]
    assert spans(detect(nar((1, "a"), (3, "b")), parse_term("either(a, b)"))) == [(1, 1), (3, 3)]


def test_seq_recent_consumption():
    d = detect(nar((1, "a"), (2, "a"), (3, "b"), (4, "b")), parse_term("seq(a, b)"))
    assert spans(d) == [(2, 3), (1, 4)]
    d = detect(nar((1, "a"), (3, "b"), (4, "b")), parse_term("seq(a, b)"))
    assert spans(d) == [(1, 3)]


def test_seq_binds_shared_variables():
    events = nar((1, parse_term("req(s1)")), (2, parse_term("req(s2)")), (5, parse_term("ack(s1)")))
    (d,) = detect(events, parse_term("seq(req(S), ack(S))"))
    assert (d.start, d.end, d.as_dict()) == (1, 5, {"S": sym("s1")})


def test_times_sliding_and_absolute():
    pings = nar(*[(t, "fail") for t in (1000, 2000, 3000, 4000, 9000)])
    assert spans(detect(pings, parse_term("times(fail, 4, 4000)"))) == [(1000, 4000)]
    assert spans(detect(pings, parse_term("times(fail, 2, window(0, 5000))"))) == [(1000, 2000), (3000, 4000)]
    assert detect(pings, parse_term("times(fail, 3, 1500)")) == []


def test_absent_tumbling_windows():
    events = nar((1500, "ok"))
    assert spans(detect(events, parse_term("absent(ok, 1000)"), upto=3500)) == [(0, 1000), (2001, 3000)]
    with pytest.raises(EventExprError):
        detect(events, parse_term("absent(ok, 1000)"))


@pytest.mark.parametrize("expr", ["times(a, 0, 10)", "absent(a, window(5, 1))", "times(a, 2, -3)", "absent(a, x)"])
def test_bad_expressions(expr):
    with pytest.raises(EventExprError):
        detect([], parse_term(expr), upto=10)


def test_identical_events_get_distinct_parts():
    d = detect(nar((5, "a"), (5, "a")), parse_term("times(a, 2, 1)"))
    assert spans(d) == [(5, 5)] and len(d[0].parts) == 2


_narratives = st.lists(st.tuples(st.integers(0, 30), st.sampled_from(["a", "b", "c"])), max_size=25).map(sorted)


@settings(max_examples=200, deadline=None)
@given(_narratives)
def test_seq_against_pair_enumeration(pairs):
    events = nar(*pairs)
    dets = detect(events, parse_term("seq(a, b)"))
    naive = seq_pairs([t for t, e in pairs if e == "a"], [t for t, e in pairs if e == "b"])
    assert set(spans(dets)) <= naive
    assert bool(dets) == bool(naive)
    used = [p for d in dets for p in d.parts]
    assert len(used) == len(set(used))  # each occurrence consumed at most once
    for d in dets:
        assert d.start <= d.end
        assert all(d.start <= p[0] <= d.end for p in d.parts)
    n_a = sum(1 for _, e in pairs if e == "a")
    n_b = sum(1 for _, e in pairs if e == "b")
    assert len(dets) <= min(n_a, n_b)


@settings(max_examples=200, deadline=None)
@given(_narratives, st.sampled_from(["seq(a, b)", "both(a, b)", "either(a, c)", "times(a, 2, 10)", "seq(both(a, b), c)"]), st.integers(0, 30))
def test_detect_is_monotone_in_upto(pairs, expr, cut):
    events = nar(*pairs)
    e = parse_term(expr)
    early, late = detect(events, e, upto=cut), detect(events, e, upto=30)
    assert set(d.key for d in early) <= set(d.key for d in late)
    assert all(d.end <= cut for d in early)


def test_detect_reads_kb_narrative():
    kb = kb_of("happens(a, 1). happens(b, 3).")
    assert spans(detect(kb, parse_term("seq(a, b)"))) == [(1, 3)]


def test_const_event_is_not_a_compound():
    assert detect(nar((1, "a")), Const("a", "sym"))[0].end == 1
