"""Genie-side hash-collision event monitor.

The decoder can only deviate from the region-membership oracle if some
impostor sequence survives every hash round: there exist a set A, a round
l, and a nonempty proper party subset B of A such that some x' differing
from the truth exactly on the rows in B (a) has a joint type that places
the round-l rates inside the Δ-restricted omniscience region of A, and
(b) collides with the true rows on every hash bit sent so far by every
party in B.  The monitor decides this event for every (A, l, B) instance
of a run.

Exact resolution exploits that the two defining conditions bound the
candidate set from two sides.  Hash consistency confines each fake row to
an affine coset of the stacked hash matrix's null space (size 2^d, d =
row bits - rank), which shrinks as rounds accumulate.  The type condition
implies H(fake row | other rows) <= R_B - |B|Δ, confining the row to a
low-conditional-entropy ball that is small while rates are small.  Each
instance is resolved by enumerating whichever side is smaller and
filtering by the other condition; a depth-first pass over the parties of
B short-circuits as soon as one party has no surviving candidate, and any
full assignment is confirmed against exact region membership of its joint
type.

When both sides exceed the budget, or the depth-first pass would have to
check more full assemblies than the per-instance caps allow (both happen
once accumulated rates push the entropy threshold past the point where
it prunes anything), "auto" mode draws the instance from the analytic
per-instance collision bound 2^{-n|B|Δ} using a dedicated seeded stream,
and the run report labels how many instances were sampled rather than
resolved; "exact" mode raises instead.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np

from .core import JointDistribution, SequenceMatrix
from .errors import InternalConsistencyError, ResourceLimitError
from .hashing import (decode_row_bits, derive_rng, encode_row_bits,
                      enumerate_affine_space, gf2_nullspace)
from .region import in_co_region

#: Prefer the coset route outright when its size is at most this.
COSET_SMALL = 1 << 13
#: Largest coset the monitor will enumerate.
COSET_CAP = 1 << 19
#: Largest number of type-side sequences the monitor will enumerate.
TYPE_CAP = 1 << 12
#: Node cap for the conditional-type counting pass.
COUNT_NODE_CAP = 200_000
#: Largest number of full-assembly region checks per instance.
LEAF_CAP = 1 << 12
#: Largest number of candidate-row filter operations per instance.
WORK_CAP = 1 << 20


class _Unresolved(Exception):
    pass


class CollisionMonitor:
    def __init__(self, seqs: SequenceMatrix, delta: Fraction, mode: str,
                 master_seed: int, tol: float = 1e-9):
        if mode not in ("exact", "auto", "off"):
            raise InternalConsistencyError(f"bad monitor mode {mode}")
        self.seqs = seqs
        self.alphabet = seqs.alphabet
        self.n = seqs.n
        self.delta = Fraction(delta)
        self.deltaf = float(delta)
        self.mode = mode
        self.tol = tol
        self.rng = derive_rng(master_seed, 0xE11E)
        self.plogp = np.zeros(self.n + 1)
        ks = np.arange(1, self.n + 1)
        self.plogp[1:] = ks * np.log2(ks)
        self.row_bits = {
            j: encode_row_bits(seqs.row(j), self.alphabet.bits_per_symbol(j))
            for j in range(1, seqs.m + 1)}
        # results
        self.occurred = False
        self.hits: list = []
        self.instances = 0
        self.sampled = 0
        self._round_cache: dict = {}
        self._comp_cache: dict = {}
        self._truth_cache: dict = {}

    # ------------------------------------------------------------------
    def evaluate_round(self, l: int, active_parts, rates, stacked):
        """Scan the (A, l, B) instances of the current round until one
        collision is found (a run's fate needs only existence).

        ``active_parts`` are the communicating parts, ``rates`` maps party
        to its exact rate, ``stacked`` maps party to its accumulated hash
        matrix.  Returns True if a collision event was found this round.
        """
        if self.mode == "off":
            return False
        if self.occurred:
            # one collision already decides the run; skip the (expensive)
            # high-rate instances of later rounds
            return True
        self._round_cache = {}
        self._stacked = stacked
        parts = sorted(active_parts, key=min)
        for r in range(2, len(parts) + 1):
            for combo in combinations(parts, r):
                a_parties = tuple(sorted(set().union(*combo)))
                for size in range(1, len(a_parties)):
                    for b in combinations(a_parties, size):
                        self.instances += 1
                        if self._instance(a_parties, b, l, rates):
                            self.occurred = True
                            self.hits.append((l, a_parties, b))
                            return True
        return False

    # ------------------------------------------------------------------
    def _instance(self, a_parties, b_parties, l, rates) -> bool:
        self._leaves = 0
        self._work = 0
        try:
            if len(b_parties) == 1:
                return self._instance_single(a_parties, b_parties[0], rates)
            return self._dfs(a_parties, b_parties, l, rates,
                             list(b_parties), {})
        except _Unresolved:
            if self.mode == "exact":
                raise ResourceLimitError(
                    f"collision instance A={a_parties} B={b_parties} round "
                    f"{l} exceeds the exact monitor budget")
            self.sampled += 1
            p = 2.0 ** (-self.n * len(b_parties) * self.deltaf)
            return bool(self.rng.random() < p)

    def _instance_single(self, a_parties, j, rates) -> bool:
        """Exact resolution for a single fake row, all candidates at once.

        With |B| = 1 every region constraint is an affine function of the
        candidate's joint type with the (true) context rows, so the whole
        coset is filtered with vectorized entropy passes instead of one
        region check per candidate.
        """
        theta = float(rates[j]) - self.deltaf
        if theta < -self.tol:
            return False
        context = tuple(i for i in a_parties if i != j)
        cells = self._true_cells(context)
        cands = self._single_candidates(j, theta, cells, context)
        if cands.shape[0] == 0:
            return False
        mask = (cands != self.seqs.row(j)[None, :]).any(axis=1)
        habs = {}       # joint entropy vectors for subsets containing j
        for r in range(len(context) + 1):
            for sub in combinations(context, r):
                habs[frozenset(sub) | {j}] = self._habs_vector(
                    cands, self._true_cells(sub), self.alphabet.size_of(j))
        h_all = habs[frozenset(a_parties)]
        for size in range(1, len(a_parties)):
            for bprime in combinations(a_parties, size):
                rest = tuple(i for i in a_parties if i not in bprime)
                h_rest = (habs[frozenset(rest)] if j in rest
                          else self._true_entropy(rest))
                bound = (sum(float(rates[i]) for i in bprime)
                         - size * self.deltaf + self.tol)
                mask &= (h_all - h_rest) <= bound
                if not mask.any():
                    return False
        return bool(mask.any())

    def _single_candidates(self, j, theta, cells, context):
        d = self._coset_dim(j)
        if (1 << d) <= COSET_CAP:
            syms = self._coset_syms(j)
            hkey = ("hcond", j, context)
            if hkey not in self._round_cache:
                self._round_cache[hkey] = self._hcond_vector(j, syms, cells)
            keep = self._round_cache[hkey] <= theta + self.tol
            return syms[keep].astype(np.int64)
        count = self._type_count(j, theta, cells)
        if count is not None and count <= 4 * TYPE_CAP:
            rows = self._type_candidates(j, theta, cells)
            if not rows:
                return np.zeros((0, self.n), dtype=np.int64)
            return np.stack(rows)
        raise _Unresolved

    def _habs_vector(self, cands, cells, size):
        """Joint-type entropy of (cell context, candidate row) per candidate."""
        k = cands.shape[0]
        sum_plogp = np.zeros(k)
        for cols in cells:
            block = cands[:, cols]
            for s in range(size):
                sum_plogp += self.plogp[(block == s).sum(axis=1)]
        return (self.n * math.log2(self.n) - sum_plogp) / self.n

    def _true_cells(self, parties):
        key = ("cells", parties)
        if key not in self._truth_cache:
            if not parties:
                self._truth_cache[key] = [np.arange(self.n)]
            else:
                self._truth_cache[key] = self._context_cells(
                    np.stack([self.seqs.row(i) for i in parties]))
        return self._truth_cache[key]

    def _true_entropy(self, parties) -> float:
        key = ("htrue", parties)
        if key not in self._truth_cache:
            rows = {i: self.seqs.row(i) for i in parties}
            self._truth_cache[key] = type_of_rows(
                rows, self.alphabet).entropy()
        return self._truth_cache[key]

    def _dfs(self, a_parties, b_parties, l, rates, remaining, fixed) -> bool:
        if not remaining:
            # once the threshold stops biting (high accumulated rates) the
            # product of per-party cosets explodes; cap the exact effort
            self._leaves += 1
            if self._leaves > LEAF_CAP:
                raise _Unresolved
            rows = {}
            for i in a_parties:
                rows[i] = fixed[i] if i in fixed else self.seqs.row(i)
            dist = type_of_rows(rows, self.alphabet)
            rate_map = {i: float(rates[i]) for i in a_parties}
            return in_co_region(rate_map, dist, a_parties,
                                delta=self.deltaf, tol=self.tol)
        theta = (sum(float(rates[j]) for j in remaining)
                 - len(remaining) * self.deltaf)
        if theta < -self.tol:
            return False
        context = [i for i in a_parties if i not in remaining]
        context_rows = np.stack([
            fixed[i] if i in fixed else self.seqs.row(i) for i in context])
        cacheable = not fixed
        # Resolve the cheapest remaining party first; an empty candidate
        # set settles the whole branch.
        order = sorted(remaining,
                       key=lambda j: self._coset_dim(j))
        j = order[0]
        candidates = self._candidates(j, l, theta, context, context_rows,
                                      cacheable)
        for row in candidates:
            fixed[j] = row
            remaining.remove(j)
            try:
                if self._dfs(a_parties, b_parties, l, rates, remaining, fixed):
                    return True
            finally:
                remaining.append(j)
                del fixed[j]
        return False

    # ------------------------------------------------------------------
    def _coset_dim(self, j) -> int:
        key = ("dim", j)
        if key not in self._round_cache:
            nb = self.n * self.alphabet.bits_per_symbol(j)
            basis = gf2_nullspace(self._stacked(j), nb)
            self._round_cache[("basis", j)] = basis
            self._round_cache[key] = basis.shape[0]
        return self._round_cache[key]

    def _candidates(self, j, l, theta, context, context_rows, cacheable):
        """Rows x'_j != x_j that collide with x_j on every hash sent so far
        and satisfy H(type(x'_j) | context rows) <= theta."""
        d = self._coset_dim(j)
        cells = self._context_cells(context_rows)
        if (1 << d) <= COSET_SMALL:
            return self._coset_candidates(j, theta, cells, context, cacheable)
        count = self._type_count(j, theta, cells)
        if count is not None and count <= TYPE_CAP:
            return self._type_candidates(j, theta, cells)
        if (1 << d) <= COSET_CAP:
            return self._coset_candidates(j, theta, cells, context, cacheable)
        raise _Unresolved

    @staticmethod
    def _context_cells(context_rows):
        """Column groups sharing the same context symbol tuple."""
        n = context_rows.shape[1]
        keys = [tuple(int(v) for v in context_rows[:, c]) for c in range(n)]
        cells: dict[tuple, list[int]] = {}
        for c, key in enumerate(keys):
            cells.setdefault(key, []).append(c)
        return [np.array(cols) for cols in cells.values()]

    # -- coset route ---------------------------------------------------
    def _coset_syms(self, j):
        key = ("syms", j)
        if key not in self._round_cache:
            basis = self._round_cache[("basis", j)]
            bits = enumerate_affine_space(self.row_bits[j], basis)
            b = self.alphabet.bits_per_symbol(j)
            syms = decode_row_bits(bits, b).astype(np.uint8)
            size = self.alphabet.size_of(j)
            if (1 << b) != size:
                syms = syms[(syms < size).all(axis=1)]
            self._round_cache[key] = syms
        return self._round_cache[key]

    def _coset_candidates(self, j, theta, cells, context, cacheable):
        syms = self._coset_syms(j)
        hkey = ("hcond", j, tuple(context))
        if cacheable and hkey in self._round_cache:
            hcond = self._round_cache[hkey]
        else:
            self._work += syms.shape[0]
            if self._work > WORK_CAP:
                raise _Unresolved
            hcond = self._hcond_vector(j, syms, cells)
            if cacheable:
                self._round_cache[hkey] = hcond
        idxs = np.nonzero(hcond <= theta + self.tol)[0]
        true_row = self.seqs.row(j)

        def stream():
            # lazy: a true instance usually stops at the first survivor
            for idx in idxs:
                row = syms[idx].astype(np.int64)
                if not np.array_equal(row, true_row):
                    yield row

        return stream()

    def _hcond_vector(self, j, syms, cells):
        """H(row type | context cells) for every candidate row, vectorized."""
        k = syms.shape[0]
        total = np.zeros(k)
        size = self.alphabet.size_of(j)
        for cols in cells:
            n_c = len(cols)
            block = syms[:, cols]
            sum_plogp = np.zeros(k)
            for s in range(size):
                counts = (block == s).sum(axis=1)
                sum_plogp += self.plogp[counts]
            total += n_c * math.log2(n_c) - sum_plogp
        return total / self.n

    # -- type route ----------------------------------------------------
    def _cell_compositions(self, n_c, size):
        """(counts, n*entropy contribution) for distributing n_c columns
        over ``size`` symbols."""
        key = (n_c, size)
        cached = self._comp_cache.get(key)
        if cached is not None:
            return cached
        out = []

        def rec(prefix, left, slots):
            if slots == 1:
                counts = prefix + (left,)
                contrib = n_c * math.log2(n_c) - sum(
                    self.plogp[c] for c in counts)
                out.append((counts, contrib))
                return
            for c in range(left + 1):
                rec(prefix + (c,), left - c, slots - 1)

        rec((), n_c, size)
        self._comp_cache[key] = out
        return out

    def _qualifying_types(self, j, theta, cells, node_cap):
        """DFS over per-cell symbol-count assignments with entropy pruning.

        Yields (per-cell (counts, class size) tuples); raises _Unresolved
        when the node cap is hit.  A qualifying assignment has conditional
        entropy at most theta; class size is the number of rows realizing
        the counts within a cell.
        """
        size = self.alphabet.size_of(j)
        per_cell = [self._cell_compositions(len(cols), size) for cols in cells]
        budget_bits = self.n * (theta + self.tol)
        nodes = 0

        def rec(i, partial, chosen):
            nonlocal nodes
            if partial > budget_bits:
                return
            if i == len(cells):
                yield tuple(chosen)
                return
            n_c = len(cells[i])
            for counts, contrib in per_cell[i]:
                nodes += 1
                if nodes > node_cap:
                    raise _Unresolved
                cls = math.prod(
                    math.comb(n_c - sum(counts[:t]), counts[t])
                    for t in range(size))
                chosen.append((counts, cls))
                yield from rec(i + 1, partial + contrib, chosen)
                chosen.pop()

        yield from rec(0, 0.0, [])

    def _type_count(self, j, theta, cells):
        try:
            total = 0
            for spec in self._qualifying_types(j, theta, cells,
                                               COUNT_NODE_CAP):
                total += math.prod(cls for _, cls in spec)
                if total > 4 * TYPE_CAP:
                    return total
            return total
        except _Unresolved:
            return None

    def _type_candidates(self, j, theta, cells):
        stacked = self._stacked(j)
        b = self.alphabet.bits_per_symbol(j)
        true_row = self.seqs.row(j)
        rows = []
        for spec in self._qualifying_types(j, theta, cells,
                                           COUNT_NODE_CAP):
            for row in self._placements(spec, cells):
                rows.append(row)
                if len(rows) > 4 * TYPE_CAP:
                    raise _Unresolved
        if not rows:
            return []
        mat = np.stack(rows)
        bits = np.stack([encode_row_bits(r, b) for r in mat])
        diff = bits ^ self.row_bits[j][None, :]
        if stacked.shape[0]:
            syndrome = (diff.astype(np.int64) @ stacked.T.astype(np.int64)) % 2
            ok = ~syndrome.any(axis=1)
        else:
            ok = np.ones(mat.shape[0], dtype=bool)
        out = []
        for idx in np.nonzero(ok)[0]:
            row = mat[idx]
            if not np.array_equal(row, true_row):
                out.append(row)
        return out

    def _placements(self, spec, cells):
        """All rows realizing the given per-cell symbol counts."""
        template = np.zeros(self.n, dtype=np.int64)

        def fill_cell(cols, counts):
            # all ways to assign symbols with the given multiplicities
            cols = list(cols)

            def rec(sym, cols_left):
                if sym == len(counts) - 1:
                    yield [(c, sym) for c in cols_left]
                    return
                for chosen in combinations(cols_left, counts[sym]):
                    rest = [c for c in cols_left if c not in chosen]
                    for tail in rec(sym + 1, rest):
                        yield [(c, sym) for c in chosen] + tail

            yield from rec(0, cols)

        def rec_cells(i):
            if i == len(cells):
                yield template.copy()
                return
            counts, _cls = spec[i]
            for assignment in fill_cell(cells[i], counts):
                for c, s in assignment:
                    template[c] = s
                yield from rec_cells(i + 1)

        yield from rec_cells(0)


def type_of_rows(rows: dict, alphabet) -> JointDistribution:
    """Joint type of a row assembly keyed by party index."""
    parties = tuple(sorted(rows))
    stack = np.stack([rows[i] for i in parties])
    n = stack.shape[1]
    counts: dict[tuple, int] = {}
    for c in range(n):
        key = tuple(int(v) for v in stack[:, c])
        counts[key] = counts.get(key, 0) + 1
    mass = {k: Fraction(v, n) for k, v in counts.items()}
    sizes = [alphabet.size_of(i) for i in parties]
    return JointDistribution(parties, sizes, mass, denominator=n,
                             _validate=False)
