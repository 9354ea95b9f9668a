"""Entropies, partition enumeration, and the partition-dual objective.

A partition is represented as a tuple of disjoint frozensets ("parts")
covering a ground collection.  Ground items may be party indices (ints) or
parts of an outer partition (frozensets of ints); ``flatten`` maps either
kind to the underlying party set so entropy lookups stay uniform.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Sequence

from .core import JointDistribution, as_subset
from .errors import InvalidArgumentError, ResourceLimitError

#: Largest ground-set size enumerate_partitions will accept.
PARTITION_GROUND_BUDGET = 10

Part = frozenset


def flatten(item) -> tuple[int, ...]:
    """Map a ground item (party index or collection of them) to party tuple."""
    if isinstance(item, int):
        return (item,)
    members: list[int] = []
    for sub in item:
        members.extend(flatten(sub))
    return as_subset(members)


def flatten_all(items: Iterable) -> tuple[int, ...]:
    members: list[int] = []
    for item in items:
        members.extend(flatten(item))
    return as_subset(members)


def entropy(dist: JointDistribution, subset=None) -> float:
    """H(X_subset) in bits; ``subset`` may hold parties or parts."""
    return dist.entropy(None if subset is None else flatten(subset))


def conditional_entropy(dist: JointDistribution, target, given) -> float:
    """H(X_target | X_given); target and given must be disjoint."""
    return dist.conditional_entropy(flatten(target), flatten(given))


def binary_entropy(q: float) -> float:
    """h(q) = -q log2 q - (1-q) log2 (1-q), with h(0) = h(1) = 0."""
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise InvalidArgumentError(f"probability {q} outside [0, 1]")
    if q in (0.0, 1.0):
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def canonical_partition(parts: Iterable[Iterable]) -> tuple[Part, ...]:
    """Normalize to a tuple of frozensets ordered by smallest member."""
    normalized = tuple(sorted((Part(p) for p in parts), key=lambda p: min(
        flatten_all(p))))
    seen: set = set()
    for part in normalized:
        if not part:
            raise InvalidArgumentError("empty part in partition")
        for item in part:
            if item in seen:
                raise InvalidArgumentError(f"item {item!r} appears in two parts")
            seen.add(item)
    return normalized


def singleton_partition(ground: Iterable) -> tuple[Part, ...]:
    return canonical_partition([{item} for item in ground])


def enumerate_partitions(ground: Iterable, min_parts: int = 1,
                         budget: int = PARTITION_GROUND_BUDGET
                         ) -> Iterator[tuple[Part, ...]]:
    """Yield each partition of ``ground`` with at least ``min_parts`` parts."""
    items = list(ground)
    if len(items) > budget:
        raise ResourceLimitError(
            f"ground of size {len(items)} exceeds partition budget {budget}",
            budget=budget)
    if not items:
        raise InvalidArgumentError("empty ground set")

    def recurse(remaining: Sequence, blocks: list[list]):
        if not remaining:
            if len(blocks) >= min_parts:
                yield canonical_partition(blocks)
            return
        head, rest = remaining[0], remaining[1:]
        for i in range(len(blocks)):
            blocks[i].append(head)
            yield from recurse(rest, blocks)
            blocks[i].pop()
        blocks.append([head])
        yield from recurse(rest, blocks)
        blocks.pop()

    yield from recurse(items, [])


def is_coarsening(coarse: Sequence[Part], fine: Sequence[Part]) -> bool:
    """True iff every part of ``fine`` lies inside a single part of ``coarse``."""
    return all(any(part <= big for big in coarse) for part in fine)


def h_sigma(dist: JointDistribution, ground, sigma: Sequence[Part]) -> float:
    """The partition-dual objective (1/(|σ|-1)) Σ_i H(X_ground | X_{σ_i})."""
    sigma = canonical_partition(sigma)
    if len(sigma) < 2:
        raise InvalidArgumentError("h_sigma needs a nontrivial partition")
    ground_parties = flatten_all(ground)
    if flatten_all(part for part in sigma) != ground_parties:
        raise InvalidArgumentError("partition does not cover the ground set")
    h_ground = dist.entropy(ground_parties)
    total = sum(h_ground - dist.entropy(flatten_all(part)) for part in sigma)
    return total / (len(sigma) - 1)


def sort_parts_by_entropy(dist: JointDistribution, parts: Iterable[Part],
                          tol: float = 1e-9) -> list[Part]:
    """Descending part entropy; ties (within tol) by ascending smallest member.

    The tolerance only affects tie grouping: parts whose entropies differ by
    less than ``tol`` are ordered by their index key rather than by noise in
    the float entropies.
    """
    decorated = []
    for part in parts:
        h = dist.entropy(flatten_all(part))
        decorated.append((h, min(flatten_all(part)), part))
    decorated.sort(key=lambda t: t[1])
    decorated.sort(key=lambda t: t[0], reverse=True)
    # Stable bubble pass: restore index order inside near-tied entropy runs.
    changed = True
    while changed:
        changed = False
        for i in range(len(decorated) - 1):
            a, b = decorated[i], decorated[i + 1]
            if abs(a[0] - b[0]) <= tol and b[1] < a[1]:
                decorated[i], decorated[i + 1] = b, a
                changed = True
    return [part for _, _, part in decorated]
