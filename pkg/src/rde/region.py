"""The omniscience rate region and its analytic companions.

Two independent routes to the minimum sum-rate are kept deliberately
separate: ``rco_lp`` solves the linear program over the 2^|A|-2 conditional
entropy constraints, while ``rco_partition_max`` maximizes the partition-dual
objective.  Their agreement is an end-to-end correctness check, so neither
may call the other.

Every operation is "entity level": a ground set is a sequence of entities,
where an entity is either a party index or a frozenset of party indices (a
part of a partition acting as a single party).  Rate vectors are mappings
from those same entities to values; ``None`` marks an inactive entity.
"""

from __future__ import annotations

from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import JointDistribution
from .errors import (AmbiguityError, InvalidArgumentError,
                     InternalConsistencyError, ResourceLimitError)
from .measures import (canonical_partition, enumerate_partitions, flatten,
                       flatten_all, h_sigma, is_coarsening)

#: LP route budget: number of entities in the ground set.
LP_GROUND_BUDGET = 8

#: Default boundary tolerance for floating-point entropy comparisons.
DEFAULT_TOL = 1e-9


def _normalize_ground(ground) -> tuple[list, list[tuple[int, ...]]]:
    """Return (entities as given, per-entity flattened party tuples)."""
    entities = list(ground)
    if len(entities) < 2:
        raise InvalidArgumentError("ground set needs at least 2 entities")
    parties = [flatten(e) for e in entities]
    seen: set[int] = set()
    for group in parties:
        if seen & set(group):
            raise InvalidArgumentError("entities overlap")
        seen |= set(group)
    return entities, parties


def co_constraints(dist: JointDistribution, ground):
    """Yield (entity index tuple B, H(X_B | X_{ground minus B})) for every
    nonempty proper entity subset B of the ground set."""
    entities, parties = _normalize_ground(ground)
    k = len(entities)
    all_parties = flatten_all(ground)
    for r in range(1, k):
        for idx in combinations(range(k), r):
            b_parties = flatten_all(parties[i] for i in idx)
            rest = tuple(p for p in all_parties if p not in b_parties)
            yield idx, dist.conditional_entropy(b_parties, rest)


def in_co_region(rates: Mapping, dist: JointDistribution, ground,
                 delta: float = 0.0, tol: float = DEFAULT_TOL) -> bool:
    """Membership of a rate vector in the (Δ-restricted) omniscience region.

    True iff R_B >= H(X_B | X_{ground minus B}) + |B|Δ - tol for every
    nonempty proper subset B of entities.  Ties resolve toward membership.
    """
    entities, _ = _normalize_ground(ground)
    values = []
    for e in entities:
        if e not in rates or rates[e] is None:
            raise InvalidArgumentError(f"entity {e!r} is inactive or missing")
        values.append(float(rates[e]))
    delta = float(delta)
    if delta < 0:
        raise InvalidArgumentError("delta must be >= 0")
    for idx, h in co_constraints(dist, ground):
        r_b = sum(values[i] for i in idx)
        if r_b < h + len(idx) * delta - tol:
            return False
    return True


def region_slacks(rates: Mapping, dist: JointDistribution, ground,
                  delta: float = 0.0):
    """Per-constraint slack table: (entities of B, required, actual, slack)."""
    entities, _ = _normalize_ground(ground)
    rows = []
    for idx, h in co_constraints(dist, ground):
        r_b = sum(float(rates[entities[i]]) for i in idx)
        required = h + len(idx) * float(delta)
        rows.append((tuple(entities[i] for i in idx), required, r_b,
                     r_b - required))
    return rows


def rco_lp(dist: JointDistribution, ground, budget: int = LP_GROUND_BUDGET):
    """Minimum sum-rate for omniscience via the linear program route.

    Returns (value, optimal rate vector keyed by entity).
    """
    entities, _ = _normalize_ground(ground)
    k = len(entities)
    if k > budget:
        raise ResourceLimitError(
            f"{k} entities exceeds LP budget {budget}", budget=budget)
    rows, rhs = [], []
    for idx, h in co_constraints(dist, ground):
        row = np.zeros(k)
        row[list(idx)] = -1.0
        rows.append(row)
        rhs.append(-h)
    result = linprog(c=np.ones(k), A_ub=np.array(rows), b_ub=np.array(rhs),
                     bounds=[(0, None)] * k, method="highs")
    if not result.success:
        raise InternalConsistencyError(f"LP solve failed: {result.message}")
    rates = {e: float(x) for e, x in zip(entities, result.x)}
    return float(result.fun), rates


def rco_partition_max(dist: JointDistribution, ground):
    """Minimum sum-rate via the partition-dual route.

    Returns (value, a maximizing partition of the entity collection); among
    maximizers the finest (most parts) is returned, ties by enumeration order.
    """
    entities, _ = _normalize_ground(ground)
    scored = [(h_sigma(dist, entities, sigma), sigma)
              for sigma in enumerate_partitions(entities, min_parts=2)]
    best_value = max(v for v, _ in scored)
    best_sigma = max((sigma for v, sigma in scored if v >= best_value - 1e-12),
                     key=len)
    return best_value, best_sigma


def finest_dominant_partition(dist: JointDistribution, ground,
                              tol: float = DEFAULT_TOL):
    """The finest partition attaining the partition-dual maximum.

    Among partitions whose objective is within ``tol`` of the maximum,
    returns the one with the most parts after verifying that every other
    near-maximizer is a coarsening of it.
    """
    entities, _ = _normalize_ground(ground)
    scored = [(h_sigma(dist, entities, sigma), sigma)
              for sigma in enumerate_partitions(entities, min_parts=2)]
    top = max(v for v, _ in scored)
    near = [sigma for v, sigma in scored if v >= top - tol]
    finest = max(near, key=len)
    for sigma in near:
        if not is_coarsening(sigma, finest):
            raise AmbiguityError(
                f"near-maximizers {sigma} and {finest} share no refinement "
                f"order at tol={tol}")
    return finest


def r_star(dist: JointDistribution, ground) -> dict:
    """The unique rate assignment solving the first-omniscience equations.

    R*_e = ℍ_{σ_f}(ground) - H(X_ground | X_e) for each entity e; entries may
    be negative (the assignment need not be feasible).
    """
    entities, parties = _normalize_ground(ground)
    sigma_f = canonical_partition([{e} for e in entities])
    base = h_sigma(dist, entities, sigma_f)
    all_parties = flatten_all(ground)
    h_ground = dist.entropy(all_parties)
    return {e: base - (h_ground - dist.entropy(group))
            for e, group in zip(entities, parties)}


def find_omniscience_subset(dist: JointDistribution, sigma, delta: float = 0.0,
                            tol: float = DEFAULT_TOL):
    """A sub-collection B of parts (|B| >= 2) whose R* rates, computed on the
    full ground, are feasible for local omniscience among B alone.

    Searched by decreasing size, ties lexicographically.  Returns None if no
    sub-collection qualifies (which would falsify the existence guarantee and
    is asserted against in the property suite).
    """
    parts = list(canonical_partition(sigma))
    if len(parts) < 2:
        raise InvalidArgumentError("need at least 2 parts")
    rates = r_star(dist, parts)
    for size in range(len(parts), 1, -1):
        for combo in combinations(range(len(parts)), size):
            chosen = [parts[i] for i in combo]
            if in_co_region({p: rates[p] for p in chosen}, dist, chosen,
                            delta=delta, tol=tol):
                return tuple(chosen)
    return None
