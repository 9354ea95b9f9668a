"""Monte Carlo orchestration, oracle cross-checks, and report files.

Trials are seed-isolated: trial i of a batch samples its block from
RNG stream (master_seed, i) and runs the protocol with a seed derived
from the same pair, so results are independent of execution order and
parallelism degree.  Reports carry a schema_version for regression
baselines and are byte-deterministic for a fixed batch spec.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .core import JointDistribution, empirical_type, sample_iid
from .errors import InvalidArgumentError
from .ideal import run_ideal
from .measures import canonical_partition, singleton_partition
from .protocol import ProtocolConfig, run_exchange
from .region import (finest_dominant_partition, in_co_region, r_star, rco_lp,
                     rco_partition_max, find_omniscience_subset)
from .scenarios import get_scenario, load_scenario
from .secretkey import run_sk, sk_capacity

SCHEMA_VERSION = 1


# ----------------------------------------------------------------------
def random_pmf(rng: np.random.Generator, sizes) -> JointDistribution:
    """A random full-support pmf over the product alphabet (Dirichlet(1))."""
    sizes = tuple(int(s) for s in sizes)
    cells = math.prod(sizes)
    weights = rng.dirichlet(np.ones(cells))
    symbols = list(np.ndindex(*sizes))
    mass = {tuple(int(v) for v in sym): float(w)
            for sym, w in zip(symbols, weights)}
    return JointDistribution(range(1, len(sizes) + 1), sizes, mass)


def oracle_check(count: int = 100, seed: int = 0) -> dict:
    """Cross-check the analytic machinery on random instances.

    Findings are reported, not raised: the ledger carries the worst
    deviation seen per check and an overall ok flag.
    """
    rng = np.random.default_rng([seed, 0x0C])
    ledger = {
        "count": count,
        "dual_gap": 0.0,
        "target_identity": 0.0,
        "fdp_coarsening_failures": 0,
        "subset_missing": 0,
        "fdp_examples_ok": True,
    }
    for _ in range(count):
        m = int(rng.integers(2, 5))
        sizes = [int(rng.integers(2, 4)) for _ in range(m)]
        dist = random_pmf(rng, sizes)
        ground = dist.parties
        lp_value, _ = rco_lp(dist, ground)
        pm_value, _ = rco_partition_max(dist, ground)
        ledger["dual_gap"] = max(ledger["dual_gap"], abs(lp_value - pm_value))
        # the target rates solve sum_{j != i} R_j = H(X_A | X_i) exactly
        targets = r_star(dist, ground)
        for i in ground:
            lhs = sum(targets[j] for j in ground if j != i)
            rhs = dist.conditional_entropy(
                [j for j in ground if j != i], [i])
            ledger["target_identity"] = max(ledger["target_identity"],
                                            abs(lhs - rhs))
        try:
            finest_dominant_partition(dist, ground)
        except Exception:
            ledger["fdp_coarsening_failures"] += 1
        sigma = singleton_partition(ground)
        if find_omniscience_subset(dist, sigma) is None:
            ledger["subset_missing"] += 1
    expected_fdp = {
        "ex1": canonical_partition([{1}, {2}, {3}]),
        "ex2": canonical_partition([{1, 2}, {3}]),
        "ex3": canonical_partition([{1, 2, 3}, {4}]),
    }
    for name, want in expected_fdp.items():
        dist = get_scenario(name).dist
        got = finest_dominant_partition(dist, dist.parties)
        if got != want:
            ledger["fdp_examples_ok"] = False
    ledger["ok"] = (ledger["dual_gap"] < 1e-7
                    and ledger["target_identity"] < 1e-9
                    and ledger["fdp_coarsening_failures"] == 0
                    and ledger["subset_missing"] == 0
                    and ledger["fdp_examples_ok"])
    return ledger


# ----------------------------------------------------------------------
@dataclass
class TrialBatch:
    scenario: str               # built-in name or JSON path
    n: int
    delta: str | Fraction = "auto"   # "auto" = ~n^{-1/2}
    seeds: int = 100
    master_seed: int = 0
    decoder: str = "genie"
    monitor: str = "auto"
    mode: str = "exchange"      # "exchange" | "sk"
    dkey: float = 0.1           # secrecy target for sk mode
    eps_n: float = 1e-3
    out: str | None = None
    jobs: int = 1

    def resolved_delta(self) -> Fraction:
        if self.delta == "auto":
            return Fraction(self.n ** -0.5).limit_denominator(1024)
        return Fraction(self.delta)


def _load(scenario: str):
    if scenario.endswith(".json"):
        return load_scenario(scenario)
    return get_scenario(scenario)


def _run_trial(spec: dict) -> dict:
    batch = TrialBatch(**spec["batch"])
    idx = spec["index"]
    scen = _load(batch.scenario)
    seqs = sample_iid(scen.dist, batch.n, [batch.master_seed, idx])
    config = ProtocolConfig(delta=batch.resolved_delta(),
                            decoder=batch.decoder, monitor=batch.monitor)
    run_seed = batch.master_seed * 1_000_003 + idx
    row = {"seed": idx, "n": batch.n,
           "delta": float(config.delta)}
    if batch.mode == "sk":
        material, report = run_sk(seqs, config, run_seed,
                                  delta_sec=batch.dkey, eps_n=batch.eps_n)
        row.update(k=material.k, k_rate=material.k / batch.n,
                   agreement=material.agreement,
                   secrecy_bound=material.secrecy_bound)
    else:
        report = run_exchange(seqs, config, run_seed)
    rco_type, _ = rco_partition_max(
        empirical_type(seqs, range(1, seqs.m + 1)),
        tuple(range(1, seqs.m + 1)))
    row.update(
        outcome=report.outcome,
        failed=report.failed,
        rounds=report.rounds,
        hash_bits=report.hash_bits,
        type_bits=report.type_bits,
        ack_bits=report.ack_bits,
        total_bits=report.total_bits,
        sum_rate=report.sum_rate,
        rco_type=rco_type,
        excess=report.total_bits / batch.n - rco_type,
        monitor_sampled=(report.monitor or {}).get("sampled", 0),
        collision_event=report.collision_event,
    )
    return row


_CSV_FIELDS = ["seed", "n", "delta", "outcome", "failed", "rounds",
               "hash_bits", "type_bits", "ack_bits", "total_bits",
               "sum_rate", "rco_type", "excess", "monitor_sampled",
               "collision_event", "k", "k_rate", "agreement",
               "secrecy_bound"]


def run_batch(batch: TrialBatch) -> dict:
    """Execute a batch and return (and optionally write) its summary."""
    if batch.mode not in ("exchange", "sk"):
        raise InvalidArgumentError(f"unknown batch mode {batch.mode!r}")
    specs = [{"batch": asdict(batch), "index": i}
             for i in range(batch.seeds)]
    if batch.jobs > 1 and specs:
        with ProcessPoolExecutor(max_workers=batch.jobs) as pool:
            rows = list(pool.map(_run_trial, specs))
    else:
        rows = [_run_trial(s) for s in specs]

    successes = [r for r in rows if not r["failed"]]
    summary = {
        "schema_version": SCHEMA_VERSION,
        # out/jobs describe the execution environment, not the experiment,
        # and must not break byte-determinism of reports
        "batch": {k: str(v) if isinstance(v, Fraction) else v
                  for k, v in asdict(batch).items()
                  if k not in ("out", "jobs")},
        "trials": len(rows),
        "failures": sum(r["failed"] for r in rows),
        "failure_rate": (sum(r["failed"] for r in rows) / len(rows)
                         if rows else 0.0),
        "mean_excess": (sum(r["excess"] for r in successes) / len(successes)
                        if successes else None),
        "mean_rounds": (sum(r["rounds"] for r in rows) / len(rows)
                        if rows else 0.0),
        "total_bits": sum(r["total_bits"] for r in rows),
    }
    if batch.mode == "sk":
        agreed = [r for r in rows if r.get("agreement")]
        summary["agreement_rate"] = (len(agreed) / len(rows) if rows else 0.0)
        summary["mean_k_rate"] = (sum(r["k_rate"] for r in agreed)
                                  / len(agreed) if agreed else None)
        summary["max_secrecy_bound"] = max(
            (r["secrecy_bound"] for r in rows), default=0.0)
        scen = _load(batch.scenario)
        summary["capacity"] = sk_capacity(scen.dist)
    if batch.out:
        _write_reports(batch.out, summary, rows)
    summary["rows"] = rows
    return summary


def _write_reports(prefix: str, summary: dict, rows: list):
    try:
        with open(prefix + ".json", "w") as f:
            json.dump({**summary, "rows": rows}, f, indent=1, sort_keys=True)
            f.write("\n")
        with open(prefix + ".csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=_CSV_FIELDS,
                                    extrasaction="ignore", restval="")
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
    except OSError as exc:
        raise InvalidArgumentError(
            f"cannot write reports with prefix {prefix!r}: {exc}") from exc


def ideal_summary(scenario: str) -> dict:
    """Fluid-limit trajectory of a scenario, as plain data."""
    scen = _load(scenario)
    traj = run_ideal(scen.dist)
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": scen.name,
        "events": [{"time": e.time, "clock": e.clock, "kind": e.kind,
                    "detail": repr(e.detail)} for e in traj.events],
        "terminal_rates": {str(k): v for k, v in traj.terminal_rates.items()},
        "terminal_sum": traj.terminal_sum,
        "violations": [repr(v) for v in traj.violations],
    }
