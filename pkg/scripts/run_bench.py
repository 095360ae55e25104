#!/usr/bin/env python3
"""Run every bench profile over a range of sizes and print a table (optionally CSV).

    python3 scripts/run_bench.py --sizes 100 1000 5000 --csv bench.csv
"""
import argparse
import csv

from slalog.bench import PROFILES, format_table, run_bench

# tc grows quadratically in answers; keep its sizes modest
CAPS = {"tc": 400, "defeasible": 1000}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 100, 1000, 5000])
    ap.add_argument("--profiles", nargs="+", choices=PROFILES, default=list(PROFILES))
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    rows = []
    for p in args.profiles:
        for n in args.sizes:
            if n > CAPS.get(p, n):
                continue
            rows.append(run_bench(p, n, args.repeat))
            print(format_table(rows[-1:]).splitlines()[1], flush=True)
    print()
    print(format_table(rows), end="")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0].as_dict()))
            w.writeheader()
            w.writerows(r.as_dict() for r in rows)


if __name__ == "__main__":
    main()
