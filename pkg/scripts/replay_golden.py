#!/usr/bin/env python3
"""Run the golden SLA scenario twice and confirm the reports are byte-identical.

    python3 scripts/replay_golden.py [--out DIR]
"""
import argparse
import filecmp
import tempfile
from pathlib import Path

from slalog.cli import main as slalog

ROOT = Path(__file__).resolve().parent.parent / "contracts"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=None)
    ap.add_argument("--contract", default=str(ROOT / "golden_sla.ctr"))
    ap.add_argument("--events", default=str(ROOT / "golden_events.jsonl"))
    ap.add_argument("--horizon", type=int, default=10000)
    args = ap.parse_args(argv)
    out = Path(args.out or tempfile.mkdtemp(prefix="slalog-replay-"))
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for i in (1, 2):
        rep = out / f"report{i}.json"
        code = slalog(["run", args.contract, "--events", args.events, "--horizon", str(args.horizon), "--report", str(rep)])
        if code:
            raise SystemExit(code)
        reports.append(rep)
    same = filecmp.cmp(*reports, shallow=False)
    print(f"reports in {out}: {'byte-identical' if same else 'DIFFERENT'}")
    raise SystemExit(0 if same else 1)


if __name__ == "__main__":
    main()
