import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rde.core import JointDistribution
from rde.errors import InvalidArgumentError, ResourceLimitError
from rde.measures import (binary_entropy, canonical_partition,
                          enumerate_partitions, flatten, h_sigma,
                          is_coarsening, singleton_partition,
                          sort_parts_by_entropy)
from rde.scenarios import get_scenario


def bell_partitions(k):
    return list(enumerate_partitions(range(1, k + 1)))


class TestBinaryEntropy:
    def test_endpoints(self):
        assert binary_entropy(0) == 0.0
        assert binary_entropy(1) == 0.0
        assert binary_entropy(0.5) == pytest.approx(1.0)

    def test_known_value(self):
        assert binary_entropy(0.2) == pytest.approx(0.7219280948873623)

    def test_domain(self):
        with pytest.raises(InvalidArgumentError):
            binary_entropy(-0.1)
        with pytest.raises(InvalidArgumentError):
            binary_entropy(1.1)


class TestPartitions:
    def test_flatten_nested(self):
        assert flatten(frozenset({frozenset({2, 3}), 1})) == (1, 2, 3)

    def test_counts_are_bell_numbers(self):
        assert len(bell_partitions(3)) == 5
        assert len(bell_partitions(4)) == 15
        assert len(list(enumerate_partitions(range(1, 4), min_parts=2))) == 4

    def test_budget(self):
        with pytest.raises(ResourceLimitError):
            list(enumerate_partitions(range(20), budget=5))

    def test_canonical_order_and_disjointness(self):
        p = canonical_partition([{3}, {1, 2}])
        assert p == (frozenset({1, 2}), frozenset({3}))
        with pytest.raises(InvalidArgumentError):
            canonical_partition([{1, 2}, {2, 3}])

    def test_singletons(self):
        assert singleton_partition([2, 1]) == (frozenset({1}), frozenset({2}))

    def test_coarsening(self):
        fine = canonical_partition([{1}, {2}, {3}])
        coarse = canonical_partition([{1, 2}, {3}])
        assert is_coarsening(coarse, fine)
        assert not is_coarsening(fine, coarse)
        assert is_coarsening(coarse, coarse)


class TestPartitionObjective:
    def test_two_formulas_agree(self):
        # (1/(k-1)) Σ H(X_A|X_σi)  ==  (1/(k-1)) (k H(X_A) - Σ H(X_σi))
        d = get_scenario("ex2").dist
        ground = d.parties
        for sigma in enumerate_partitions(ground, min_parts=2):
            direct = sum(d.conditional_entropy(
                [p for p in ground if p not in part], sorted(part))
                for part in sigma)
            k = len(sigma)
            closed = k * d.entropy() - sum(
                d.entropy(sorted(part)) for part in sigma)
            assert h_sigma(d, ground, sigma) * (k - 1) == pytest.approx(
                closed, abs=1e-10)
            # direct sum uses H(X_{A∖σi}|X_σi) + H(σi) - H(σi) form
            direct_full = sum(
                d.entropy() - d.entropy(sorted(part)) for part in sigma)
            assert direct_full == pytest.approx(closed, abs=1e-10)
            assert direct >= 0

    def test_needs_nontrivial_partition(self):
        d = get_scenario("ex1").dist
        with pytest.raises(InvalidArgumentError):
            h_sigma(d, d.parties, [frozenset({1, 2, 3})])

    def test_must_cover_ground(self):
        d = get_scenario("ex1").dist
        with pytest.raises(InvalidArgumentError):
            h_sigma(d, d.parties, [frozenset({1}), frozenset({2})])


class TestSorting:
    def test_descending_entropy(self):
        d = get_scenario("ex1").dist
        parts = singleton_partition(d.parties)
        ordered = sort_parts_by_entropy(d, parts)
        hs = [d.entropy(sorted(p)) for p in ordered]
        assert hs == sorted(hs, reverse=True)

    def test_ties_by_smallest_member(self):
        d = get_scenario("ex1").dist  # H(X1) = H(X2) = 1
        ordered = sort_parts_by_entropy(
            d, [frozenset({2}), frozenset({1}), frozenset({3})])
        assert ordered[0] == frozenset({1})
        assert ordered[1] == frozenset({2})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_objective_at_singletons_from_random_pmf(seed):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(8))
    mass = {tuple(sym): float(p) for sym, p in
            zip(np.ndindex(2, 2, 2), w)}
    d = JointDistribution((1, 2, 3), (2, 2, 2), mass)
    sigma = singleton_partition(d.parties)
    value = h_sigma(d, d.parties, sigma)
    closed = (3 * d.entropy() - sum(d.entropy([i]) for i in (1, 2, 3))) / 2
    assert value == pytest.approx(closed, abs=1e-10)
    assert value >= -1e-12
