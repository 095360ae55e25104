"""Reference implementations used only by the tests.

None of these import slalog: each one restates the semantics directly over
plain Python data so that disagreement points at a real bug.
"""
from __future__ import annotations

# ---------------------------------------------------------------------------
# well-founded model via unfounded sets (W_P iteration)
#
# A ground program is a list of (head, pos, neg) with atoms as strings.


def wfs_unfounded(program):
    """Return {atom: "true" | "false" | "undefined"} for every atom mentioned."""
    atoms = set()
    for h, pos, neg in program:
        atoms.add(h)
        atoms.update(pos)
        atoms.update(neg)
    true, false = set(), set()

    def lit_false(a, positive):
        return (a in false) if positive else (a in true)

    def body_true(pos, neg):
        return all(a in true for a in pos) and all(a in false for a in neg)

    def body_false(pos, neg):
        return any(lit_false(a, True) for a in pos) or any(lit_false(a, False) for a in neg)

    while True:
        t_new = {h for h, pos, neg in program if body_true(pos, neg)}
        unfounded = set(atoms)
        changed = True
        while changed:
            changed = False
            for h, pos, neg in program:
                if h in unfounded and not body_false(pos, neg) and not (set(pos) & unfounded):
                    unfounded.discard(h)
                    changed = True
        nt, nf = true | t_new, false | unfounded
        if (nt, nf) == (true, false):
            break
        true, false = nt, nf
    return {a: "true" if a in true else "false" if a in false else "undefined" for a in atoms}


# ---------------------------------------------------------------------------
# propositional defeasible logic (ambiguity blocking, no team defeat)
#
# Literals are strings, "~p" is the complement of "p".  Rules are
# (label, kind, head, body) with kind in strict|defeasible|defeater.


def neg(lit: str) -> str:
    return lit[1:] if lit.startswith("~") else "~" + lit


def defeasible_tags(facts, rules, sup):
    """Return dict with keys +D, -D, +d, -d mapping to sets of literals."""
    lits = set(facts)
    for _, _, h, body in rules:
        lits.add(h)
        lits.update(body)
    lits |= {neg(l) for l in lits}
    strict = [r for r in rules if r[1] == "strict"]
    sup = set(sup)
    facts = set(facts)
    pD, mD = set(), set()
    while True:
        npD = set(pD)
        nmD = set(mD)
        for q in lits:
            if q in facts or any(h == q and all(b in pD for b in body) for _, _, h, body in strict):
                npD.add(q)
            if q not in facts and all(any(b in mD for b in body) for _, _, h, body in strict if h == q):
                nmD.add(q)
        if (npD, nmD) == (pD, mD):
            break
        pD, mD = npD, nmD
    pd, md = set(), set()
    supportive = [r for r in rules if r[1] != "defeater"]
    while True:
        npd, nmd = set(pd), set(md)
        for q in lits:
            nq = neg(q)
            attackers = [s for s in rules if s[2] == nq]
            # +d
            if q in pD:
                npd.add(q)
            elif nq in mD:
                for r in supportive:
                    if r[2] != q or not all(b in pd for b in r[3]):
                        continue
                    if all(any(b in md for b in s[3]) or (r[0], s[0]) in sup for s in attackers):
                        npd.add(q)
                        break
            # -d
            if q in mD:
                if nq in pD:
                    nmd.add(q)
                else:
                    ok = True
                    for r in supportive:
                        if r[2] != q:
                            continue
                        if any(b in md for b in r[3]):
                            continue
                        if any(all(b in pd for b in s[3]) and (r[0], s[0]) not in sup for s in attackers):
                            continue
                        ok = False
                        break
                    if ok:
                        nmd.add(q)
        if (npd, nmd) == (pd, md):
            break
        pd, md = npd, nmd
    return {"+D": pD, "-D": mD, "+d": pd, "-d": md}


# ---------------------------------------------------------------------------
# event calculus by definition


def ec_holds(fluent, t, narrative, initiates, terminates, initially):
    """``narrative``: (time, event); ``initiates``/``terminates``: event -> set of fluents."""

    def clipped(t1, t2):
        return any(t1 <= s < t2 and fluent in terminates.get(e, ()) for s, e in narrative)

    if fluent in initially and not clipped(0, t):
        return True
    return any(s < t and fluent in initiates.get(e, ()) and not clipped(s, t) for s, e in narrative)


# ---------------------------------------------------------------------------
# single-norm timeline


def norm_timeline(kind, activated, deadline, relative, good=(), bad=(), waiver=None):
    """(state, since) after resolving one obligation or prohibition.

    ``good``: target times (obligation); ``bad``: target times (prohibition).
    Returns None when never activated; ("active", Ta) when unresolved.
    """
    if activated is None:
        return None
    due = max(activated + deadline if relative else deadline, activated + 1)
    cands = []
    if kind == "obligation":
        hits = [g for g in good if activated < g <= due]
        if hits:
            cands.append((min(hits), 0, "fulfilled"))
        else:
            cands.append((due, 2, "violated"))
    else:
        hits = [b for b in bad if activated < b <= due]
        if hits:
            cands.append((min(hits), 2, "violated"))
        else:
            cands.append((due, 0, "fulfilled"))
    if waiver is not None:
        cands.append((max(waiver, activated + 1), 1, "waived"))
    t, _, state = min(cands)
    return state, t


def state_at(timeline, activated, t):
    if timeline is None or t < activated:
        return "inactive"
    state, since = timeline
    return state if t >= since else "active"


# ---------------------------------------------------------------------------
# event algebra helpers


def seq_pairs(a_times, b_times):
    """All (ta, tb) pairs with ta <= tb, ignoring consumption."""
    return {(a, b) for a in a_times for b in b_times if a <= b}
