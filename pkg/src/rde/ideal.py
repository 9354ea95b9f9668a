"""Event-driven fluid-limit simulation of the ideal exchange protocol.

Rates grow piecewise-linearly: every active part raises its members' rates
at slope 1/|part| (so each part contributes total slope 1).  Two kinds of
events punctuate the flow: an inactive part activates when the top part's
rate reaches the entropy gap H(top) - H(part), and a union of active parts
merges the moment its member rates enter the omniscience region of the
union.  Merges are processed before activations on ties, and all maximal
disjoint unions merge simultaneously.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .core import JointDistribution, SequenceMatrix, empirical_type
from .errors import InternalConsistencyError, InvalidArgumentError
from .measures import flatten_all, sort_parts_by_entropy
from .region import in_co_region

TIME_TOL = 1e-12
ENTROPY_TOL = 1e-9

#: Ideal-simulation party budget (candidate unions are enumerated).
IDEAL_PARTY_BUDGET = 10


@dataclass
class Event:
    time: float
    clock: float
    kind: str          # "activate" | "merge" | "terminate"
    detail: tuple


@dataclass
class Trajectory:
    breakpoints: list = field(default_factory=list)  # (time, clock, rates)
    events: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    terminal_rates: dict = field(default_factory=dict)
    final_merge_parts: tuple = ()

    @property
    def terminal_sum(self) -> float:
        return sum(self.terminal_rates.values())


class _FluidState:
    def __init__(self, dist: JointDistribution):
        self.dist = dist
        self.parts = [frozenset([i]) for i in dist.parties]
        self.active: set[frozenset] = set()
        self.rates = {i: 0.0 for i in dist.parties}
        self.time = 0.0
        self._resort()

    def _resort(self):
        self.parts = sort_parts_by_entropy(self.dist, self.parts)

    def part_entropy(self, part) -> float:
        return self.dist.entropy(flatten_all(part))

    @property
    def top(self):
        return self.parts[0]

    def part_rate(self, part) -> float:
        return sum(self.rates[j] for j in part)

    def slope(self, party: int) -> float:
        for part in self.parts:
            if party in part:
                return 1.0 / len(part) if part in self.active else 0.0
        raise InternalConsistencyError(f"party {party} not in any part")

    def advance(self, dt: float):
        if dt < -TIME_TOL:
            raise InternalConsistencyError("time went backwards")
        dt = max(0.0, dt)
        for j in self.rates:
            self.rates[j] += self.slope(j) * dt
        self.time += dt


def dec_ideal(j: int, parts, active, rates, dist: JointDistribution,
              delta: float = 0.0, tol: float = ENTROPY_TOL):
    """Ideal decoder for party j: the maximal union of active parts strictly
    containing j's part whose member rates sit inside the omniscience region.

    Returns the union as a frozenset of parties, or None (no local
    omniscience yet).  Ties among incomparable maxima resolve to the largest,
    then lexicographically smallest, union.
    """
    parts = list(parts)
    active = set(active)
    own = next((p for p in parts if j in p), None)
    if own is None or own not in active:
        raise InvalidArgumentError(f"party {j} is not active")
    others = [p for p in parts if p != own and p in active]
    hits = []
    for r in range(len(others), 0, -1):
        for combo in combinations(others, r):
            union = [own, *combo]
            rate_map = {p: sum(rates[i] for i in p) for p in union}
            if in_co_region(rate_map, dist, union, delta=delta, tol=tol):
                hits.append(frozenset().union(*union))
        if hits:
            break
    if not hits:
        return None
    return min(hits, key=lambda a: tuple(sorted(a)))


def _merge_entry_time(state: _FluidState, union_parts) -> float:
    """Earliest time >= now at which the union's party rates enter the
    omniscience region of the union, given current slopes."""
    parties = flatten_all(frozenset().union(*union_parts))
    entry = state.time
    for r in range(1, len(parties)):
        for b in combinations(parties, r):
            rest = tuple(p for p in parties if p not in b)
            h = state.dist.conditional_entropy(b, rest)
            r_b = sum(state.rates[i] for i in b)
            slope = sum(state.slope(i) for i in b)
            gap = h - r_b
            if gap <= ENTROPY_TOL:
                continue
            if slope <= 0.0:
                return float("inf")
            entry = max(entry, state.time + gap / slope)
    return entry


def next_event(state: _FluidState):
    """(time, kind, payload) for the earliest pending event.

    kind "activate": payload is the list of parts crossing their threshold;
    kind "merge": payload is the list of candidate unions entering the
    region at that time.  Merges win ties.
    """
    top_rate = state.part_rate(state.top)
    act_time, act_parts = float("inf"), []
    for part in state.parts:
        if part in state.active:
            continue
        threshold = (state.part_entropy(state.top) - state.part_entropy(part))
        t = state.time + (threshold - top_rate)
        t = max(t, state.time)
        if t < act_time - TIME_TOL:
            act_time, act_parts = t, [part]
        elif t <= act_time + TIME_TOL:
            act_parts.append(part)

    merge_time, merge_unions = float("inf"), []
    active_parts = [p for p in state.parts if p in state.active]
    for r in range(2, len(active_parts) + 1):
        for combo in combinations(active_parts, r):
            t = _merge_entry_time(state, combo)
            if t < merge_time - TIME_TOL:
                merge_time, merge_unions = t, [combo]
            elif t <= merge_time + TIME_TOL:
                merge_unions.append(combo)

    if merge_time <= act_time + TIME_TOL and merge_unions:
        return merge_time, "merge", merge_unions
    if act_parts:
        return act_time, "activate", act_parts
    return float("inf"), "none", []


def _check_validity(state: _FluidState, violations: list):
    """Reconstructability invariant at an event boundary: active parts keep
    the constant entropy difference, inactive parts sit below the activation
    threshold, and every multi-member part is internally omniscient."""
    ordered = [p for p in state.parts if p in state.active]
    for a, b in combinations(ordered, 2):
        diff = state.part_rate(a) - state.part_rate(b)
        href = state.part_entropy(a) - state.part_entropy(b)
        if abs(diff - href) > 1e-6:
            violations.append((state.time, "constant-difference", a, b,
                               diff, href))
    top_rate = state.part_rate(state.top)
    for part in state.parts:
        if part in state.active:
            continue
        gap = state.part_entropy(state.top) - state.part_entropy(part)
        if top_rate > gap + 1e-6:
            violations.append((state.time, "inactive-threshold", part,
                               top_rate, gap))
    for part in state.parts:
        if len(part) < 2:
            continue
        rate_map = {i: state.rates[i] for i in part}
        if not in_co_region(rate_map, state.dist, sorted(part), delta=0.0,
                            tol=1e-6):
            violations.append((state.time, "part-not-omniscient", part))


def run_ideal(source) -> Trajectory:
    """Run the fluid-limit protocol to global omniscience.

    ``source`` is a JointDistribution (used directly as the joint type) or a
    SequenceMatrix (its empirical type is used).
    """
    if isinstance(source, SequenceMatrix):
        dist = empirical_type(source, range(1, source.m + 1))
    else:
        dist = source
    if len(dist.parties) < 2:
        raise InvalidArgumentError("need at least 2 parties")
    if len(dist.parties) > IDEAL_PARTY_BUDGET:
        raise InvalidArgumentError("party count exceeds ideal-simulation budget")

    state = _FluidState(dist)
    traj = Trajectory()
    # The top part starts active at rate zero; equal-entropy parts follow
    # immediately through the ordinary activation rule.
    state.active.add(state.top)
    _record(state, traj)
    _check_validity(state, traj.violations)

    guard = 0
    while len(state.parts) > 1:
        guard += 1
        if guard > 10 * len(dist.parties) ** 2 + 100:
            raise InternalConsistencyError("event loop failed to terminate")
        t, kind, payload = next_event(state)
        if kind == "none" or t == float("inf"):
            raise InternalConsistencyError(
                "no finite event before global omniscience")
        state.advance(t - state.time)
        clock = state.part_rate(state.top)
        if kind == "merge":
            unions = _consensus_unions(payload)
            for union in unions:
                members = frozenset().union(*union)
                traj.events.append(Event(state.time, clock, "merge",
                                         (members,
                                          sum(state.rates[i] for i in members))))
                state.parts = [p for p in state.parts if p not in union]
                state.parts.append(members)
                state.active -= set(union)
                state.active.add(members)
                traj.final_merge_parts = tuple(union)
            state._resort()
        else:
            for part in payload:
                state.active.add(part)
                traj.events.append(Event(state.time, clock, "activate",
                                         (part,)))
        _record(state, traj)
        _check_validity(state, traj.violations)

    traj.terminal_rates = dict(state.rates)
    traj.events.append(Event(state.time, state.part_rate(state.top),
                             "terminate", (tuple(state.parts),)))
    return traj


def _consensus_unions(candidates):
    """From simultaneous candidate unions, keep inclusion-maximal ones and
    require every part to agree on its maximal union (the omniscience-family
    consensus); overlapping disagreement signals a tolerance bug."""
    as_sets = [frozenset(c) for c in candidates]
    maximal = [c for c in as_sets
               if not any(c < other for other in as_sets)]
    chosen = []
    used: set = set()
    for c in sorted(maximal, key=lambda c: (-len(c),
                                            tuple(sorted(map(min, c))))):
        if used & set(c):
            raise InternalConsistencyError(
                "overlapping simultaneous merges without a common union")
        chosen.append(tuple(sorted(c, key=min)))
        used |= set(c)
    return chosen


def _record(state: _FluidState, traj: Trajectory):
    if traj.breakpoints and abs(traj.breakpoints[-1][0] - state.time) <= TIME_TOL:
        traj.breakpoints[-1] = (state.time, state.part_rate(state.top),
                                dict(state.rates))
    else:
        traj.breakpoints.append((state.time, state.part_rate(state.top),
                                 dict(state.rates)))
