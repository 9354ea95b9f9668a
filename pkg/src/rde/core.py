"""Finite alphabets, multiparty sequences, joint distributions and types.

Parties are numbered 1..m.  A party subset is any iterable of party indices;
internally subsets are canonicalized to sorted tuples.  Probability masses may
be exact :class:`fractions.Fraction` values (always the case for empirical
types, where every weight is a count over n) or floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError

#: Default cap on the number of types enumerate_types will stream.
TYPE_ENUMERATION_BUDGET = 2_000_000


def as_subset(members: Iterable[int]) -> tuple[int, ...]:
    """Canonicalize a party subset to a sorted tuple, rejecting duplicates."""
    subset = tuple(sorted(members))
    if len(set(subset)) != len(subset):
        raise InvalidArgumentError(f"duplicate party indices in {subset}")
    return subset


@dataclass(frozen=True)
class Alphabet:
    """Per-party alphabet cardinalities |X_i|."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.sizes) < 1 or any(s < 1 for s in self.sizes):
            raise InvalidArgumentError(f"bad alphabet sizes {self.sizes}")

    @property
    def m(self) -> int:
        return len(self.sizes)

    def size_of(self, party: int) -> int:
        return self.sizes[party - 1]

    def product_size(self, subset: Iterable[int] | None = None) -> int:
        parties = range(1, self.m + 1) if subset is None else subset
        return math.prod(self.size_of(i) for i in parties)

    def bits_per_symbol(self, party: int) -> int:
        """Bits needed for the fixed-width binary encoding of one symbol."""
        return max(1, (self.size_of(party) - 1).bit_length())


class SequenceMatrix:
    """An m x n matrix of symbols; row i-1 is party i's length-n observation."""

    def __init__(self, data, alphabet: Alphabet):
        arr = np.asarray(data, dtype=np.int64)
        if arr.ndim != 2:
            raise InvalidArgumentError("sequence data must be 2-D")
        if arr.shape[0] != alphabet.m:
            raise InvalidArgumentError(
                f"{arr.shape[0]} rows but alphabet has {alphabet.m} parties")
        if arr.shape[1] < 1:
            raise InvalidArgumentError("block length must be >= 1")
        for i in range(alphabet.m):
            row = arr[i]
            if row.min() < 0 or row.max() >= alphabet.sizes[i]:
                raise InvalidArgumentError(
                    f"row {i + 1} has symbols outside [0, {alphabet.sizes[i]})")
        self.data = arr
        self.alphabet = alphabet

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def row(self, party: int) -> np.ndarray:
        return self.data[party - 1]

    def rows(self, subset: Iterable[int]) -> np.ndarray:
        return self.data[[i - 1 for i in as_subset(subset)]]

    def __eq__(self, other):
        return (isinstance(other, SequenceMatrix)
                and self.alphabet == other.alphabet
                and np.array_equal(self.data, other.data))


class JointDistribution:
    """A pmf (or empirical type) over a product of finite alphabets.

    ``mass`` maps joint symbol tuples, aligned with ``parties``, to weights.
    A ``denominator`` of n marks the distribution as a type in P_n; every
    weight is then an exact multiple of 1/n.
    """

    def __init__(self, parties, sizes, mass: Mapping[tuple, object],
                 denominator: int | None = None, _validate: bool = True):
        self.parties = as_subset(parties)
        self.sizes = tuple(sizes)
        if len(self.sizes) != len(self.parties):
            raise InvalidArgumentError("sizes must align with parties")
        self.mass = {tuple(k): v for k, v in mass.items() if v != 0}
        self.denominator = denominator
        self._entropy_cache: dict[tuple[int, ...], float] = {}
        self._marginal_cache: dict[tuple[int, ...], JointDistribution] = {}
        if _validate:
            self._validate()

    def _validate(self):
        k = len(self.parties)
        for sym, w in self.mass.items():
            if len(sym) != k or any(
                    not (0 <= s < z) for s, z in zip(sym, self.sizes)):
                raise InvalidArgumentError(f"symbol {sym} outside alphabet")
            if w < 0:
                raise InvalidArgumentError(f"negative mass at {sym}")
            if self.denominator is not None:
                if Fraction(w) * self.denominator % 1 != 0:
                    raise InvalidArgumentError(
                        f"mass at {sym} is not a multiple of 1/{self.denominator}")
        total = sum(self.mass.values())
        if isinstance(total, Fraction) or isinstance(total, int):
            if total != 1:
                raise InvalidArgumentError(f"masses sum to {total}, not 1")
        elif abs(total - 1.0) > 1e-12:
            raise InvalidArgumentError(f"masses sum to {total}, not 1")

    def size_of(self, party: int) -> int:
        return self.sizes[self.parties.index(party)]

    def support_size(self, subset: Iterable[int] | None = None) -> int:
        parties = self.parties if subset is None else as_subset(subset)
        return math.prod(self.size_of(i) for i in parties)

    def marginal(self, subset: Iterable[int]) -> "JointDistribution":
        """Exact marginalization onto a sub-collection of parties."""
        subset = as_subset(subset)
        if not subset:
            raise InvalidArgumentError("empty subset")
        if subset == self.parties:
            return self
        if any(i not in self.parties for i in subset):
            raise InvalidArgumentError(
                f"{subset} is not contained in parties {self.parties}")
        cached = self._marginal_cache.get(subset)
        if cached is not None:
            return cached
        idx = [self.parties.index(i) for i in subset]
        out: dict[tuple, object] = {}
        for sym, w in self.mass.items():
            key = tuple(sym[j] for j in idx)
            out[key] = out.get(key, 0) + w
        result = JointDistribution(
            subset, [self.size_of(i) for i in subset], out,
            denominator=self.denominator, _validate=False)
        self._marginal_cache[subset] = result
        return result

    def entropy(self, subset: Iterable[int] | None = None) -> float:
        """Shannon entropy in bits of the marginal on ``subset``."""
        subset = self.parties if subset is None else as_subset(subset)
        cached = self._entropy_cache.get(subset)
        if cached is not None:
            return cached
        dist = self.marginal(subset)
        total = 0.0
        for w in dist.mass.values():
            p = float(w)
            if p > 0.0:
                total -= p * math.log2(p)
        value = max(0.0, total)
        self._entropy_cache[subset] = value
        return value

    def conditional_entropy(self, target, given) -> float:
        """H(X_target | X_given) via the chain rule; sets must be disjoint."""
        target, given = as_subset(target), as_subset(given)
        if set(target) & set(given):
            raise InvalidArgumentError("target and given overlap")
        if not target:
            raise InvalidArgumentError("empty target")
        if not given:
            return self.entropy(target)
        joint = self.entropy(as_subset(target + given))
        return max(0.0, joint - self.entropy(given))

    def as_float_probs(self):
        """Support symbols and matching float probabilities, in a fixed order."""
        symbols = sorted(self.mass)
        probs = np.array([float(self.mass[s]) for s in symbols])
        return symbols, probs / probs.sum()

    def l1_distance(self, other: "JointDistribution") -> float:
        keys = set(self.mass) | set(other.mass)
        return float(sum(abs(float(self.mass.get(k, 0)) - float(other.mass.get(k, 0)))
                         for k in keys))

    def __eq__(self, other):
        return (isinstance(other, JointDistribution)
                and self.parties == other.parties
                and self.sizes == other.sizes
                and all(Fraction(self.mass.get(k, 0)) == Fraction(other.mass.get(k, 0))
                        for k in set(self.mass) | set(other.mass)))

    def __repr__(self):
        return (f"JointDistribution(parties={self.parties}, "
                f"support={len(self.mass)}, denominator={self.denominator})")


def empirical_type(seqs: SequenceMatrix, subset: Iterable[int]) -> JointDistribution:
    """The joint type of rows ``subset`` of ``seqs``: exact counts over n."""
    subset = as_subset(subset)
    if not subset:
        raise InvalidArgumentError("empty subset")
    n = seqs.n
    rows = seqs.rows(subset)
    counts: dict[tuple, int] = {}
    for col in rows.T:
        key = tuple(int(v) for v in col)
        counts[key] = counts.get(key, 0) + 1
    mass = {k: Fraction(c, n) for k, c in counts.items()}
    sizes = [seqs.alphabet.size_of(i) for i in subset]
    return JointDistribution(subset, sizes, mass, denominator=n, _validate=False)


def num_types(n: int, product_alphabet_size: int) -> int:
    """|P_n| for a product alphabet: the multiset coefficient C(n+k-1, k-1)."""
    k = product_alphabet_size
    return math.comb(n + k - 1, k - 1)


def enumerate_types(n: int, sizes: Iterable[int], parties=None,
                    budget: int = TYPE_ENUMERATION_BUDGET
                    ) -> Iterator[JointDistribution]:
    """Stream every type in P_n over the given product alphabet exactly once."""
    sizes = tuple(sizes)
    parties = tuple(range(1, len(sizes) + 1)) if parties is None else as_subset(parties)
    symbols = list(product(*[range(s) for s in sizes]))
    count = num_types(n, len(symbols))
    if count > budget:
        raise ResourceLimitError(
            f"{count} types exceeds enumeration budget {budget}", budget=budget)

    def compositions(total: int, cells: int):
        if cells == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, cells - 1):
                yield (first,) + rest

    for comp in compositions(n, len(symbols)):
        mass = {sym: Fraction(c, n) for sym, c in zip(symbols, comp) if c}
        yield JointDistribution(parties, sizes, mass, denominator=n,
                                _validate=False)


def sample_iid(dist: JointDistribution, n: int, seed) -> SequenceMatrix:
    """Draw n IID columns from ``dist``; deterministic given ``seed``.

    ``dist`` must cover parties 1..m contiguously so the result is a full
    sequence matrix.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if dist.parties != tuple(range(1, len(dist.parties) + 1)):
        raise InvalidArgumentError("sample_iid needs a distribution over parties 1..m")
    rng = np.random.default_rng(seed)
    symbols, probs = dist.as_float_probs()
    picks = rng.choice(len(symbols), size=n, p=probs)
    data = np.array([symbols[i] for i in picks], dtype=np.int64).T
    return SequenceMatrix(data, Alphabet(dist.sizes))
