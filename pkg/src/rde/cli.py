"""Command-line front end.

Subcommands:
  region        rate-region analysis of a scenario (both sum-rate routes,
                finest dominant partition, target rates)
  ideal         fluid-limit trajectory
  exchange      Monte Carlo protocol runs (CSV/JSON reports)
  sk            exchange plus key extraction
  oracle-check  random cross-checks of the analytic machinery
  batch         like exchange but sweeping several block lengths
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction

from .errors import RdeError
from .harness import TrialBatch, ideal_summary, oracle_check, run_batch
from .measures import singleton_partition
from .region import (finest_dominant_partition, r_star, rco_lp,
                     rco_partition_max)
from .scenarios import get_scenario, load_scenario
from .secretkey import sk_capacity


def _scenario(name: str):
    if name.endswith(".json"):
        return load_scenario(name)
    return get_scenario(name)


def _add_common(p):
    p.add_argument("--scenario", required=True,
                   help="built-in name (ex1/ex2/ex3) or a JSON file")


def _batch_args(p):
    _add_common(p)
    p.add_argument("--n", type=int, required=True, nargs="+")
    p.add_argument("--delta", default="auto",
                   help='rational like "1/4", or "auto" for ~n^-1/2')
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--mode", choices=["genie", "exact"], default="genie",
                   help="decoder mode")
    p.add_argument("--monitor", choices=["auto", "exact", "off"],
                   default="auto")
    p.add_argument("--out", default=None, help="report path prefix")
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rde", description="multiparty data exchange simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", help="rate-region analysis")
    _add_common(p)

    p = sub.add_parser("ideal", help="fluid-limit trajectory")
    _add_common(p)

    p = sub.add_parser("exchange", help="Monte Carlo protocol runs")
    _batch_args(p)

    p = sub.add_parser("sk", help="protocol runs plus key extraction")
    _batch_args(p)
    p.add_argument("--dkey", type=float, default=0.1,
                   help="secrecy target (statistical distance)")
    p.add_argument("--eps", type=float, default=1e-3,
                   help="assumed protocol error bound")

    p = sub.add_parser("oracle-check", help="random analytic cross-checks")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("batch", help="exchange sweep over block lengths")
    _batch_args(p)
    return parser


def _cmd_region(args) -> int:
    scen = _scenario(args.scenario)
    dist = scen.dist
    ground = dist.parties
    lp_value, lp_rates = rco_lp(dist, ground)
    pm_value, _ = rco_partition_max(dist, ground)
    fdp = finest_dominant_partition(dist, ground)
    targets = r_star(dist, ground)
    out = {
        "scenario": scen.name,
        "entropy": dist.entropy(),
        "min_sum_rate_lp": lp_value,
        "min_sum_rate_partition": pm_value,
        "lp_rates": {str(k): v for k, v in lp_rates.items()},
        "finest_dominant_partition": [sorted(p) for p in fdp],
        "target_rates": {str(k): v for k, v in targets.items()},
        "sk_capacity": sk_capacity(dist),
    }
    json.dump(out, sys.stdout, indent=1)
    print()
    return 0


def _cmd_ideal(args) -> int:
    json.dump(ideal_summary(args.scenario), sys.stdout, indent=1)
    print()
    return 0


def _run_batches(args, mode: str, extra: dict) -> int:
    failed = 0
    for n in args.n:
        out = args.out
        if out and len(args.n) > 1:
            out = f"{out}-n{n}"
        batch = TrialBatch(scenario=args.scenario, n=n, delta=args.delta,
                           seeds=args.seeds, master_seed=args.master_seed,
                           decoder=args.mode, monitor=args.monitor,
                           mode=mode, out=out, jobs=args.jobs, **extra)
        summary = run_batch(batch)
        rows = summary.pop("rows")
        failed += sum(r["outcome"] == "declared-error" for r in rows)
        json.dump(summary, sys.stdout, indent=1)
        print()
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "region":
            return _cmd_region(args)
        if args.command == "ideal":
            return _cmd_ideal(args)
        if args.command in ("exchange", "batch"):
            return _run_batches(args, "exchange", {})
        if args.command == "sk":
            return _run_batches(args, "sk",
                                {"dkey": args.dkey, "eps_n": args.eps})
        if args.command == "oracle-check":
            ledger = oracle_check(args.count, args.seed)
            json.dump(ledger, sys.stdout, indent=1)
            print()
            return 0 if ledger["ok"] else 1
    except RdeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
