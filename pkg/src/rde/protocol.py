"""The recursive data exchange protocol over hashed blocks.

One run alternates two layers.  The outer loop maintains a partition of the
parties into parts that have already attained local omniscience; each
iteration every part broadcasts its joint type, parts are re-sorted by
entropy, and the inner omniscience subroutine is called with a widened
validity slack.  The inner loop has every active part send fresh hash bits
of its members' rows (rate Δ per part per round, split evenly inside the
part), activates parts whose entropy gap has been covered, and lets every
active part attempt to decode some union of parts.  Unanimous decode
results merge parts; any decoder ambiguity stops the run with a declared
error.

Two decoders are provided.  The exact decoder enumerates every row
assembly consistent with all hash bits received so far and accepts a union
of parts when exactly one assembly places the current rates inside its
Δ-restricted omniscience region (inclusion-maximal over qualifying unions,
any ambiguity is an error).  The genie decoder applies the same
region-membership rule directly to the true joint types, which is what the
exact decoder reduces to when no hash collision event has occurred; the
collision monitor decides that event genie-side so the genie decoder
remains usable at block lengths where exact enumeration is hopeless.

All rates are exact rationals; entropies are floats compared with a small
tolerance, ties resolving toward activation and acceptance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product

import numpy as np

from .core import Alphabet, SequenceMatrix, empirical_type, num_types
from .errors import (InternalConsistencyError, InvalidArgumentError,
                     ResourceLimitError)
from .hashing import (decode_row_bits, enumerate_affine_space, gf2_nullspace,
                      random_matrix)
from .monitor import CollisionMonitor, type_of_rows
from .region import in_co_region, r_star

#: Largest per-party hash-consistent candidate set the exact decoder will
#: enumerate.
DECODER_COSET_CAP = 1 << 13


def default_slack_growth(m: int) -> int:
    """Worst-case per-iteration multiplier for the validity slack."""
    return m * m + 4 * m + 3


def frac_ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def max_rounds_bound(alphabet: Alphabet, delta: Fraction) -> int:
    """Upper bound on total hash rounds to global omniscience."""
    total_bits = math.log2(alphabet.product_size())
    return frac_ceil(Fraction(total_bits).limit_denominator(1 << 30)
                     / Fraction(delta)) + alphabet.m


@dataclass
class ProtocolConfig:
    delta: Fraction
    decoder: str = "genie"          # "genie" | "exact"
    monitor: str = "off"            # "off" | "auto" | "exact"
    alpha0: Fraction = Fraction(1)
    slack_growth: int | None = None  # defaults to default_slack_growth(m)
    tol: float = 1e-9
    decoder_budget: int = 1 << 16   # joint assemblies per candidate union
    abort_bits: int | None = None
    trace: bool = False

    def __post_init__(self):
        self.delta = Fraction(self.delta)
        if self.delta <= 0:
            raise InvalidArgumentError("delta must be positive")
        if self.decoder not in ("genie", "exact"):
            raise InvalidArgumentError(f"unknown decoder {self.decoder!r}")
        if self.monitor not in ("off", "auto", "exact"):
            raise InvalidArgumentError(f"unknown monitor mode {self.monitor!r}")


@dataclass
class RunReport:
    outcome: str                    # omniscience | declared-error |
    #                                 undetected-error | aborted
    n: int
    m: int
    delta: Fraction
    decoder: str
    seed: int
    rounds: int = 0
    iterations: int = 0
    final_sigma: tuple = ()
    rates: dict = field(default_factory=dict)
    hash_bits: int = 0
    type_bits: int = 0
    ack_bits: int = 0
    merges: list = field(default_factory=list)
    omn_records: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    monitor: dict | None = None
    trace: list = field(default_factory=list)
    #: per-party reconstruction {j: {i: row}}; shares the true rows in
    #: genie mode
    recovered: dict = field(default_factory=dict, repr=False)

    @property
    def total_bits(self) -> int:
        return self.hash_bits + self.type_bits + self.ack_bits

    @property
    def sum_rate(self) -> float:
        return float(sum(r for r in self.rates.values() if r is not None))

    @property
    def collision_event(self) -> bool:
        return bool(self.monitor and self.monitor["event_occurred"])

    @property
    def failed(self) -> bool:
        return self.outcome != "omniscience" or self.collision_event


def sort_parts(parts, entropies: dict, tol: float = 1e-9):
    """Parts in decreasing entropy; near-equal neighbors ordered by their
    smallest member so the order is stable under float jitter."""
    ordered = sorted(parts, key=lambda p: (-entropies[p], min(p)))
    changed = True
    while changed:
        changed = False
        for i in range(len(ordered) - 1):
            a, b = ordered[i], ordered[i + 1]
            if (abs(entropies[a] - entropies[b]) <= tol and min(a) > min(b)):
                ordered[i], ordered[i + 1] = b, a
                changed = True
    return ordered


def check_validity(sigma_sorted, entropies, rates, alpha, delta,
                   true_dist, tol: float = 1e-9) -> list:
    """Violations of the reconstructability invariant for a sorted partition
    with per-party rates (None = inactive part).

    Checks: active parts form a prefix of the entropy order; active parts
    keep pairwise rate differences within the slacked entropy differences;
    the top rate has not overshot the first inactive threshold; members of
    every multi-member part can reconstruct the part; and no union of two
    or more active parts is already reconstructable (else it should have
    merged).
    """
    viols = []
    slack = float(alpha) * float(delta)

    def is_active(p):
        return rates[min(p)] is not None

    def part_rate(p):
        return float(sum(rates[j] for j in p))

    active = [p for p in sigma_sorted if is_active(p)]
    s = len(active)
    if active != list(sigma_sorted[:s]):
        viols.append(("active-not-prefix", tuple(sigma_sorted)))
        return viols
    for a, b in combinations(active, 2):
        for x, y in ((a, b), (b, a)):
            gap = part_rate(x) - part_rate(y)
            allowed = entropies[x] - entropies[y] + slack
            if gap > allowed + tol:
                viols.append(("pair-difference", x, y, gap, allowed))
    if s < len(sigma_sorted) and s > 0:
        top = sigma_sorted[0]
        threshold = (entropies[top] - entropies[sigma_sorted[s]] + slack)
        if part_rate(top) > threshold + tol:
            viols.append(("inactive-threshold", sigma_sorted[s],
                          part_rate(top), threshold))
    for p in active:
        if len(p) < 2:
            continue
        rate_map = {j: float(rates[j]) for j in p}
        if not in_co_region(rate_map, true_dist, sorted(p),
                            delta=float(delta), tol=1e-6):
            viols.append(("part-not-reconstructable", p))
    for r in range(2, len(active) + 1):
        for combo in combinations(active, r):
            parties = sorted(set().union(*combo))
            rate_map = {j: float(rates[j]) for j in parties}
            if in_co_region(rate_map, true_dist, parties,
                            delta=float(delta), tol=-1e-6):
                viols.append(("union-already-reconstructable",
                              tuple(parties)))
    return viols


class _Run:
    def __init__(self, seqs: SequenceMatrix, config: ProtocolConfig,
                 seed: int):
        self.seqs = seqs
        self.config = config
        self.seed = int(seed)
        self.alphabet = seqs.alphabet
        self.n = seqs.n
        self.m = seqs.m
        if self.m < 2:
            raise InvalidArgumentError("need at least 2 parties")
        self.delta = Fraction(config.delta)
        self.deltaf = float(self.delta)
        self.tol = config.tol
        self.parties = tuple(range(1, self.m + 1))
        self.true_dist = empirical_type(seqs, self.parties)
        self.sigma = [frozenset([i]) for i in self.parties]
        self.rates: dict[int, Fraction | None] = {i: None for i in self.parties}
        self.alpha = Fraction(config.alpha0)
        self.round = 0
        self.max_rounds = max_rounds_bound(self.alphabet, self.delta)
        self.matrices: dict[int, list] = {i: [] for i in self.parties}
        self._stack_cache: dict[int, tuple] = {}
        self._cand_cache: dict[tuple, list] = {}
        # each party's current reconstruction of other parties' rows
        self.recovered = {i: {i: seqs.row(i)} for i in self.parties}
        self.monitor = CollisionMonitor(seqs, self.delta, config.monitor,
                                        self.seed, tol=self.tol)
        self.report = RunReport(outcome="running", n=self.n, m=self.m,
                                delta=self.delta, decoder=config.decoder,
                                seed=self.seed)

    # -- partition helpers ---------------------------------------------
    def is_active(self, part) -> bool:
        return self.rates[min(part)] is not None

    def part_rate(self, part) -> Fraction:
        return sum((self.rates[j] for j in part), Fraction(0))

    def _next_alpha(self, merged: int) -> Fraction:
        if self.config.slack_growth is not None:
            return self.alpha * self.config.slack_growth
        # The exit rate vector stays valid with the slack coefficient grown
        # to m*c + (2c+3)*alpha + 1, c being the largest number of parts
        # combined this iteration.  Using the realized c instead of the
        # worst case c=m keeps later activation thresholds small enough
        # that the global round bound holds at coarse Delta.
        return (self.m * merged + (2 * merged + 3) * self.alpha + 1)

    def part_type(self, part):
        if self.config.decoder == "genie":
            return empirical_type(self.seqs, sorted(part))
        rep = min(part)
        rows = {i: self.recovered[rep][i] for i in part}
        return type_of_rows(rows, self.alphabet)

    def stacked(self, j: int) -> np.ndarray:
        mats = self.matrices[j]
        cached = self._stack_cache.get(j)
        if cached is not None and cached[0] == len(mats):
            return cached[1]
        nb = self.n * self.alphabet.bits_per_symbol(j)
        mat = (np.vstack(mats) if mats
               else np.zeros((0, nb), dtype=np.uint8))
        self._stack_cache[j] = (len(mats), mat)
        return mat

    # -- decoders ------------------------------------------------------
    def _consistent_rows(self, j: int) -> list:
        """Every row of party j consistent with all hash bits so far."""
        key = (j, self.round)
        cached = self._cand_cache.get(key)
        if cached is not None:
            return cached
        nb = self.n * self.alphabet.bits_per_symbol(j)
        basis = gf2_nullspace(self.stacked(j), nb)
        if basis.shape[0] > DECODER_COSET_CAP.bit_length() - 1:
            raise ResourceLimitError(
                f"party {j} still has 2^{basis.shape[0]} hash-consistent rows;"
                " the exact decoder is for small block lengths",
                budget=DECODER_COSET_CAP)
        bits = enumerate_affine_space(
            self.monitor.row_bits[j], basis)
        syms = decode_row_bits(bits, self.alphabet.bits_per_symbol(j))
        size = self.alphabet.size_of(j)
        rows = [syms[i] for i in range(syms.shape[0])
                if syms[i].max(initial=0) < size]
        if any(k[1] != self.round for k in self._cand_cache):
            self._cand_cache.clear()     # keep only the current round
        self._cand_cache[key] = rows
        return rows

    def dec(self, part, sigma_sorted):
        """Decode attempt for one part: ("ACK", A, rows) | ("NACK",) | ("ERR",)."""
        others = [q for q in sigma_sorted
                  if q != part and self.is_active(q)]
        if not others:
            return ("NACK",)
        if self.config.decoder == "genie":
            return self._dec_genie(part, others)
        return self._dec_exact(part, others)

    def _dec_genie(self, part, others):
        qualifying = []
        for r in range(1, len(others) + 1):
            for combo in combinations(others, r):
                parties = sorted(part.union(*combo))
                rate_map = {j: float(self.rates[j]) for j in parties}
                if in_co_region(rate_map, self.true_dist, parties,
                                delta=self.deltaf, tol=self.tol):
                    qualifying.append(frozenset(parties))
        if not qualifying:
            return ("NACK",)
        maximal = [a for a in qualifying
                   if not any(a < b for b in qualifying)]
        if len(maximal) > 1:
            return ("ERR",)
        a = maximal[0]
        rows = {i: self.seqs.row(i) for i in a}
        return ("ACK", a, rows)

    def _dec_exact(self, part, others):
        rep = min(part)
        own_rows = {i: self.recovered[rep][i] for i in part}
        cand = {}
        for q in others:
            for i in q:
                cand[i] = self._consistent_rows(i)
        qualifying = []
        for r in range(1, len(others) + 1):
            for combo in combinations(others, r):
                parties = sorted(part.union(*combo))
                foreign = [i for i in parties if i not in part]
                total = math.prod(len(cand[i]) for i in foreign)
                if total > self.config.decoder_budget:
                    raise ResourceLimitError(
                        f"{total} candidate assemblies for union {parties} "
                        f"exceed the decoder budget",
                        budget=self.config.decoder_budget)
                count, example = 0, None
                rate_map = {j: float(self.rates[j]) for j in parties}
                for choice in product(*(cand[i] for i in foreign)):
                    rows = dict(own_rows)
                    rows.update(zip(foreign, choice))
                    dist = type_of_rows(rows, self.alphabet)
                    if in_co_region(rate_map, dist, parties,
                                    delta=self.deltaf, tol=self.tol):
                        count += 1
                        if example is None:
                            example = rows
                        else:
                            break
                if count:
                    qualifying.append((frozenset(parties), count, example))
        if not qualifying:
            return ("NACK",)
        maximal = [q for q in qualifying
                   if not any(q[0] < o[0] for o in qualifying)]
        if len(maximal) > 1 or maximal[0][1] > 1:
            return ("ERR",)
        a, _, rows = maximal[0]
        return ("ACK", a, rows)

    # -- the omniscience subroutine ------------------------------------
    def omn(self, sigma_sorted, entropies):
        """Run hash rounds until some decode consensus or error.

        Returns ("merge", O, results) with O the consensus unions, or
        ("declared-error",) or ("aborted", reason).
        """
        cfg = self.config
        while True:
            if self.round >= self.max_rounds:
                return ("aborted", "round bound exceeded")
            self.round += 1
            senders = [p for p in sigma_sorted if self.is_active(p)]
            for p in senders:
                bits = frac_ceil(self.n * self.delta / len(p))
                for j in p:
                    self.matrices[j].append(random_matrix(
                        bits, self.n * self.alphabet.bits_per_symbol(j),
                        self.seed, 0xA5, self.round, j))
                    self.rates[j] += self.delta / len(p)
                self.report.hash_bits += bits * len(p)
            top = sigma_sorted[0]
            top_rate = float(self.part_rate(top))
            for p in sigma_sorted:
                if self.is_active(p):
                    continue
                gap = (entropies[top] - entropies[p]
                       + float(self.alpha) * self.deltaf)
                if top_rate >= gap - self.tol:
                    for j in p:
                        self.rates[j] = Fraction(0)
            active = [p for p in sigma_sorted if self.is_active(p)]
            results = {p: self.dec(p, sigma_sorted) for p in active}
            self.report.ack_bits += len(active)
            if cfg.monitor != "off":
                rate_map = {j: self.rates[j] for p in active for j in p}
                self.monitor.evaluate_round(self.round, active, rate_map,
                                            self.stacked)
            if cfg.trace:
                self.report.trace.append({
                    "round": self.round,
                    "rates": {j: self.rates[j] for j in self.parties},
                    "senders": [tuple(sorted(p)) for p in senders],
                    "active": [tuple(sorted(p)) for p in active],
                    "results": {tuple(sorted(p)): (res[0],
                                tuple(sorted(res[1])) if res[0] == "ACK"
                                else None)
                                for p, res in results.items()},
                })
            if (cfg.abort_bits is not None
                    and self.report.total_bits > cfg.abort_bits):
                return ("aborted", "bit budget exceeded")
            kinds = {res[0] for res in results.values()}
            if "ERR" in kinds:
                return ("declared-error",)
            if "ACK" in kinds:
                acks = {p: res[1] for p, res in results.items()
                        if res[0] == "ACK"}
                omniscience_sets = []
                for a in set(acks.values()):
                    inside = [p for p in active if p <= a]
                    if (frozenset().union(*inside) == a
                            and all(acks.get(p) == a for p in inside)):
                        omniscience_sets.append(a)
                if omniscience_sets:
                    return ("merge", omniscience_sets, results)
                return ("declared-error",)

    # -- the outer recursion -------------------------------------------
    def run(self) -> RunReport:
        rep = self.report
        while True:
            rep.iterations += 1
            entropies = {}
            for p in self.sigma:
                entropies[p] = self.part_type(p).entropy()
                rep.type_bits += max(1, math.ceil(math.log2(num_types(
                    self.n, self.alphabet.product_size(sorted(p))))))
            sigma_sorted = sort_parts(self.sigma, entropies, self.tol)
            if not self.is_active(sigma_sorted[0]):
                if rep.iterations > 1:
                    rep.violations.append(
                        ("top-part-inactive", tuple(sigma_sorted[0])))
                for j in sigma_sorted[0]:
                    self.rates[j] = Fraction(0)
            self.sigma = sigma_sorted
            entry_viols = check_validity(sigma_sorted, entropies, self.rates,
                                         self.alpha, self.delta,
                                         self.true_dist, self.tol)
            rep.violations.extend(entry_viols)
            record = {"iteration": rep.iterations,
                      "alpha": self.alpha,
                      "sigma": [tuple(sorted(p)) for p in sigma_sorted],
                      "entry_violations": list(entry_viols)}
            result = self.omn(sigma_sorted, entropies)
            if result[0] == "aborted":
                rep.outcome = "aborted"
                record["aborted"] = result[1]
                rep.omn_records.append(record)
                break
            if result[0] == "declared-error":
                rep.outcome = "declared-error"
                rep.omn_records.append(record)
                break
            _, omniscience_sets, results = result
            record["returns"] = self._bracket_records(
                sigma_sorted, omniscience_sets)
            merged = 1
            for a in omniscience_sets:
                inside = [p for p in self.sigma if p <= a]
                merged = max(merged, len(inside))
                for p in inside:
                    rows = results[p][2]
                    for j in p:
                        self.recovered[j].update(rows)
                self.sigma = [p for p in self.sigma if not p <= a]
                self.sigma.append(a)
                rep.merges.append((rep.iterations, self.round,
                                   tuple(sorted(a))))
            self.alpha = self._next_alpha(merged)
            exit_entropies = {p: self.part_type(p).entropy()
                              for p in self.sigma}
            exit_sorted = sort_parts(self.sigma, exit_entropies, self.tol)
            if len(self.sigma) > 1:
                exit_viols = check_validity(exit_sorted, exit_entropies,
                                            self.rates, self.alpha,
                                            self.delta, self.true_dist,
                                            self.tol)
                rep.violations.extend(exit_viols)
                record["exit_violations"] = list(exit_viols)
            rep.omn_records.append(record)
            if len(self.sigma) == 1:
                rep.outcome = self._final_outcome()
                break
        rep.rounds = self.round
        rep.final_sigma = tuple(tuple(sorted(p)) for p in self.sigma)
        rep.rates = {j: self.rates[j] for j in self.parties}
        rep.recovered = self.recovered
        rep.monitor = {
            "mode": self.monitor.mode,
            "event_occurred": self.monitor.occurred,
            "instances": self.monitor.instances,
            "sampled": self.monitor.sampled,
            "hits": list(self.monitor.hits),
        } if self.monitor.mode != "off" else None
        return rep

    def _final_outcome(self) -> str:
        if self.config.decoder == "genie":
            return "omniscience"
        for j in self.parties:
            for i in self.parties:
                got = self.recovered[j].get(i)
                if got is None or not np.array_equal(got, self.seqs.row(i)):
                    return "undetected-error"
        return "omniscience"

    def _bracket_records(self, sigma_sorted, omniscience_sets) -> list:
        """For every merged union, the target rate assignment computed on the
        true joint type and the bracket its parts' exit rates must satisfy."""
        out = []
        for a in omniscience_sets:
            inside = [p for p in sigma_sorted if p <= a]
            dist = empirical_type(self.seqs, sorted(a))
            targets = r_star(dist, inside)
            slack = float(self.alpha) * self.deltaf
            lo_slack = 2 * slack
            hi_slack = (self.m + 2 * float(self.alpha)) * self.deltaf
            entries = []
            for p in inside:
                rate = float(self.part_rate(p))
                target = targets[p]
                entries.append({
                    "part": tuple(sorted(p)),
                    "rate": rate,
                    "target": target,
                    "within": (target - lo_slack - 1e-7 <= rate
                               <= target + hi_slack + 1e-7),
                })
            out.append({"union": tuple(sorted(a)), "parts": entries})
        return out


def run_exchange(seqs: SequenceMatrix, config: ProtocolConfig,
                 seed: int) -> RunReport:
    """Run the full exchange protocol on one observed block."""
    return _Run(seqs, config, seed).run()
