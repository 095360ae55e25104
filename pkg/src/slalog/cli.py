"""``slalog`` command-line front end.

Exit codes: 0 success, 1 failing tests or evaluation errors, 2 parse, load or
usage errors (including unsafe queries), 3 out-of-order events.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bench import PROFILES, format_table, run_bench
from .ec import EC_MODULE, library_module
from .eca import EcaEngine, Notification, latency_stats, order_events
from .errors import EventOrderError, ParseError, SlalogError, UnsafeRuleError
from .kb import AddModule, KnowledgeBase, kb_apply
from .lang.loader import load_contracts, read_program
from .lang.parser import parse_query
from .solver import Solver, query_truth
from .terms import Compound, format_term, literal_vars, num, sym, text
from .vnv import run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ORDER = 0, 1, 2, 3

_SYMBOL = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_EC_INPUTS = {("initiates", 3), ("terminates", 3), ("initially", 1)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def prepare_kb(kb: KnowledgeBase) -> KnowledgeBase:
    """Load the EC axioms, norm facts and the compiled defeasible layer when needed."""
    uses_ec = bool(kb.norms) or any(kb.defines(f, n) for f, n in _EC_INPUTS)
    if uses_ec and EC_MODULE not in kb and not kb.defines("holds_at", 2):
        kb = kb_apply(kb, [AddModule(library_module(EC_MODULE))])[0]
    if any(r.kind != "strict" for r in kb.all_rules()) and "defeasible" not in kb:
        from .defeasible import compile, theory_from_kb

        kb = kb_apply(kb, [AddModule(compile(theory_from_kb(kb)))])[0]
    if kb.norms:
        from .deontic import with_deontic

        kb = with_deontic(kb)
    return kb


# -- events file ------------------------------------------------------------


def _arg_term(v, where: str):
    if isinstance(v, bool) or v is None:
        raise ValueError(f"{where}: unsupported argument {v!r}")
    if isinstance(v, (int, float)):
        return num(v)
    if isinstance(v, str):
        return sym(v) if _SYMBOL.match(v) else text(v)
    raise ValueError(f"{where}: unsupported argument {v!r}")


def read_events(path) -> list:
    """(line number, t, event term) triples from a JSON Lines file; blank lines are skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{where}: invalid JSON ({e.msg})") from None
            if not isinstance(obj, dict) or "t" not in obj or "event" not in obj:
                raise ValueError(f"{where}: expected an object with 't' and 'event'")
            t, name, args = obj["t"], obj["event"], obj.get("args", [])
            if not isinstance(t, int) or isinstance(t, bool):
                raise ValueError(f"{where}: 't' must be an integer")
            if not isinstance(name, str) or not _SYMBOL.match(name):
                raise ValueError(f"{where}: 'event' must be a lowercase identifier")
            if not isinstance(args, list):
                raise ValueError(f"{where}: 'args' must be a list")
            terms = tuple(_arg_term(a, where) for a in args)
            out.append((lineno, t, Compound(name, terms) if terms else sym(name)))
    return out


# -- commands ---------------------------------------------------------------


def cmd_check(args) -> int:
    contracts = load_contracts(args.files)
    if args.suite:
        suite_prog = read_program(args.suite)
        tests, base_dir = suite_prog.tests, Path(args.suite).parent
        if suite_prog.module.rules or suite_prog.module.facts:
            contracts.kb = kb_apply(contracts.kb, [AddModule(suite_prog.module)])[0]
    else:
        tests, base_dir = contracts.tests, Path(args.files[-1]).parent
    kb = prepare_kb(contracts.kb)
    report = run_suite(kb, tests, base_dir, parallel=args.parallel)
    sys.stdout.write(report.to_text())
    Path(args.report).write_text(report.to_json(), encoding="utf-8")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_query(args) -> int:
    kb = prepare_kb(load_contracts(args.files).kb)
    query = parse_query(args.query)
    answers = Solver(kb).solve(query)
    if not answers:
        print("no")
    elif not literal_vars(query):
        print(str(query_truth(answers)))
    else:
        for a in answers:
            subst = ", ".join(f"{n} = {format_term(t)}" for n, t in a.bindings if not n.startswith("_"))
            print(f"{subst or 'yes'}  ({a.truth})")
    return EXIT_OK


def cmd_run(args) -> int:
    contracts = load_contracts(args.files)
    try:
        raw = read_events(args.events)
    except OSError as e:
        _err(f"{args.events}: {e.strerror}")
        return EXIT_USAGE
    try:
        events = order_events([(t, e) for _, t, e in raw], args.tolerate)
    except EventOrderError as e:
        line = raw[e.position - 1][0] if 0 < e.position <= len(raw) else e.position
        _err(f"{args.events}:{line}: event out of order ({e})")
        return EXIT_ORDER
    to_stdout = args.notify == "-"
    sink = sys.stdout if to_stdout else (open(args.notify, "w", encoding="utf-8") if args.notify else None)

    def notify(n: Notification) -> None:
        if sink:
            sink.write(n.to_json() + "\n")

    kb = contracts.kb
    if any(kb.defines(f, n) for f, n in _EC_INPUTS) and EC_MODULE not in kb and not kb.defines("holds_at", 2):
        kb = kb_apply(kb, [AddModule(library_module(EC_MODULE))])[0]
    try:
        eng = EcaEngine(
            kb,
            tick_default=args.tick_default,
            parallel=args.parallel,
            base_dir=Path(args.files[-1]).parent,
            on_notify=notify,
        )
        result = eng.run(events, args.horizon, args.tolerate)
    finally:
        if sink and not to_stdout:
            sink.close()
    rep = result.report(contracts.contract_id, include_latency=args.latency)
    Path(args.report).write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    lat = latency_stats(result.latencies_ms)
    print(f"contract {rep['contract']}: {rep['events_ingested']} events ingested, {rep['events_ignored']} ignored, "
          f"{rep['ticks']} ticks, {len(rep['fired_actions'])} rule firings, {len(rep['errors'])} action errors")
    for v in rep["violations"]:
        print(f"violation {v['norm']} at {v['time']}")
    for p in rep["penalties"]:
        print("penalty " + ", ".join(str(x) for x in p))
    if lat["count"]:
        print(f"latency per event (ms): min {lat['min']}  mean {lat['mean']}  max {lat['max']}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.size < 1:
        _err("bench: --size must be >= 1")
        return EXIT_USAGE
    row = run_bench(args.profile, args.size, args.repeat)
    sys.stdout.write(format_table([row]))
    if args.json:
        Path(args.json).write_text(json.dumps(row.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK if row.status == "ok" else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slalog", description="Rule-based SLA representation, monitoring and checking.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="run a test suite against contracts")
    c.add_argument("files", nargs="+")
    c.add_argument("--suite", help="file holding test blocks (default: tests inside the contracts)")
    c.add_argument("--report", default="check-report.json", help="JSON report path")
    c.add_argument("--parallel", action="store_true")
    c.set_defaults(func=cmd_check)

    q = sub.add_parser("query", help="answer a query")
    q.add_argument("files", nargs="+")
    q.add_argument("query")
    q.set_defaults(func=cmd_query)

    r = sub.add_parser("run", help="monitor an event log")
    r.add_argument("files", nargs="+")
    r.add_argument("--events", required=True)
    r.add_argument("--horizon", type=int, required=True)
    r.add_argument("--report", required=True)
    r.add_argument("--tick-default", type=int, default=1000)
    r.add_argument("--tolerate", type=int, default=0, help="accept timestamps this many ms out of order")
    r.add_argument("--notify", help="write notifications as JSON lines ('-' for stdout)")
    r.add_argument("--latency", action="store_true", help="include wall-clock latency in the report")
    r.add_argument("--parallel", action="store_true")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="time a synthetic workload")
    b.add_argument("--profile", choices=PROFILES, required=True)
    b.add_argument("--size", type=int, required=True)
    b.add_argument("--repeat", type=int, default=1)
    b.add_argument("--json", help="also write the row as JSON")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        _err(str(e))
        return EXIT_USAGE
    except UnsafeRuleError as e:
        _err(f"rejected: {e}")
        return EXIT_USAGE
    except ValueError as e:
        _err(str(e))
        return EXIT_USAGE
    except OSError as e:
        _err(f"{e.filename}: {e.strerror}")
        return EXIT_USAGE
    except SlalogError as e:
        _err(f"error: {e}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
