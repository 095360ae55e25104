#!/usr/bin/env python3
"""Generate a multi-service SLA contract (>= 100 rules) and a matching event log.

    python3 scripts/gen_large_contract.py --services 25 --out contracts
"""
import argparse
import json
import random
from pathlib import Path

HEADER = """% Generated multi-service availability SLA; see scripts/gen_large_contract.py.
:- module(large_sla).

:- type(gold < customer).
:- type(silver < customer).

initiates(outage_detected(S), unavailable(S), T).
terminates(service_restored(S), unavailable(S), T).

eca outage_watch {{
  every: 1000;
  event: detect(times(ping_failed(S), 3, 3000));
  condition: monitored(S), priority(S, P);
  action: raise(outage_detected(S)), assert(down(S)), notify(ops, "outage on {{S}} ({{P}})");
}}

eca restore_watch {{
  every: on_ingest;
  event: happens(service_restored(S), T);
  condition: down(S);
  action: retract(down(S)), notify(ops, "{{S}} restored at {{T}}");
}}

eca latency_watch {{
  every: on_ingest;
  event: happens(latency(S, Ms), T);
  condition: monitored(S), latency_limit(S, L), Ms > L;
  action: assert(slow(S, T));
}}

breach_count(S, high) :- slow(S, T1), slow(S, T2), T1 < T2.
"""

SERVICE = """
service({s}).
type({c}, {tier}).
customer_of({c}, {s}).
latency_limit({s}, {limit}).
monitored({s}) :- service({s}), customer_of(C, {s}).
premium_service({s}) :- customer_of(C:gold, {s}).
contact({s}, {team}) :- monitored({s}).
priority({s}, high) :- premium_service({s}), monitored({s}).
priority({s}, normal) :- monitored({s}), not premium_service({s}).
"""

NORM = """
norm o_avail_{s} {{
  kind: obligation;
  bearer: hoster;
  trigger: outage_detected({s});
  target: service_restored({s});
  deadline: +2000;
  reparation: o_credit_{s};
}}

norm o_credit_{s} {{
  kind: obligation;
  bearer: hoster;
  target: credit_paid({c});
  deadline: +30000;
}}

penalty(hoster, {c}, 100) :- horizon(T), holds_at(norm_status(o_avail_{s}, violated), T).
"""


def generate(services: int, events_per_service: int, seed: int, horizon: int):
    rng = random.Random(seed)
    parts = [HEADER.format()]
    events = []
    names = [f"s{i:02d}" for i in range(1, services + 1)]
    for i, s in enumerate(names):
        c = f"c{i + 1:02d}"
        tier = "gold" if i % 3 == 0 else "silver"
        parts.append(SERVICE.format(s=s, c=c, tier=tier, limit=200 + 50 * (i % 5), team=f"team{i % 4}"))
        if tier == "gold":
            parts.append(NORM.format(s=s, c=c))
        t = 0
        for _ in range(events_per_service):
            t += rng.randint(200, 2000)
            if t > horizon - 5000:
                break
            roll = rng.random()
            if roll < 0.1:
                for k in range(3):
                    events.append((t + 900 * k, "ping_failed", [s]))
                t += 1800
                if rng.random() < 0.5:
                    t += rng.randint(500, 4000)
                    events.append((t, "service_restored", [s]))
            elif roll < 0.5:
                events.append((t, "latency", [s, rng.randint(50, 500)]))
            else:
                events.append((t, "ping_ok", [s]))
    parts.append(f"\nhorizon({horizon}).\n")
    events.sort(key=lambda e: e[0])
    return "".join(parts), events


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--services", type=int, default=25)
    ap.add_argument("--events-per-service", type=int, default=12)
    ap.add_argument("--horizon", type=int, default=60000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "contracts"))
    args = ap.parse_args(argv)
    src, events = generate(args.services, args.events_per_service, args.seed, args.horizon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "large_sla.ctr").write_text(src, encoding="utf-8")
    with open(out / "large_events.jsonl", "w", encoding="utf-8") as fh:
        for t, name, args_ in events:
            fh.write(json.dumps({"t": t, "event": name, "args": args_}) + "\n")
    print(f"wrote {out / 'large_sla.ctr'} and {len(events)} events to {out / 'large_events.jsonl'}")


if __name__ == "__main__":
    main()
