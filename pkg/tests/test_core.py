import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rde.core import (Alphabet, JointDistribution, SequenceMatrix,
                      empirical_type, enumerate_types, num_types, sample_iid)
from rde.errors import InvalidArgumentError, ResourceLimitError


def uniform_pair():
    return JointDistribution((1, 2), (2, 2),
                             {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)})


class TestAlphabet:
    def test_basic(self):
        a = Alphabet((2, 4, 3))
        assert a.m == 3
        assert a.size_of(2) == 4
        assert a.product_size() == 24
        assert a.product_size([1, 3]) == 6

    def test_bits_per_symbol(self):
        a = Alphabet((2, 3, 4, 1))
        assert [a.bits_per_symbol(i) for i in (1, 2, 3, 4)] == [1, 2, 2, 1]

    def test_rejects_empty_and_zero(self):
        with pytest.raises(InvalidArgumentError):
            Alphabet(())
        with pytest.raises(InvalidArgumentError):
            Alphabet((2, 0))


class TestSequenceMatrix:
    def test_row_access(self):
        s = SequenceMatrix([[0, 1, 1], [1, 0, 1]], Alphabet((2, 2)))
        assert s.n == 3 and s.m == 2
        assert list(s.row(2)) == [1, 0, 1]
        assert s.rows([2, 1]).shape == (2, 3)

    def test_symbol_range_checked(self):
        with pytest.raises(InvalidArgumentError):
            SequenceMatrix([[0, 2]], Alphabet((2,)))

    def test_shape_checked(self):
        with pytest.raises(InvalidArgumentError):
            SequenceMatrix([[0, 1]], Alphabet((2, 2)))


class TestJointDistribution:
    def test_mass_must_normalize(self):
        with pytest.raises(InvalidArgumentError):
            JointDistribution((1,), (2,), {(0,): Fraction(1, 3)})

    def test_marginal_exact(self):
        d = uniform_pair()
        m = d.marginal([1])
        assert m.mass[(0,)] == Fraction(1, 2)
        assert m.denominator is None

    def test_entropy_values(self):
        d = uniform_pair()
        assert d.entropy() == pytest.approx(1.0)
        assert d.entropy([1]) == pytest.approx(1.0)
        assert d.conditional_entropy([1], [2]) == pytest.approx(0.0)

    def test_conditional_entropy_disjointness(self):
        with pytest.raises(InvalidArgumentError):
            uniform_pair().conditional_entropy([1], [1, 2])

    def test_point_mass_entropy_zero(self):
        d = JointDistribution((1, 2), (2, 2), {(1, 0): Fraction(1)})
        assert d.entropy() == 0.0


class TestTypes:
    def test_empirical_type_is_exact(self):
        s = SequenceMatrix([[0, 0, 1, 1], [0, 1, 1, 1]], Alphabet((2, 2)))
        t = empirical_type(s, [1, 2])
        assert t.mass[(0, 0)] == Fraction(1, 4)
        assert t.mass[(1, 1)] == Fraction(1, 2)
        assert t.denominator == 4

    def test_num_types_matches_enumeration(self):
        kinds = list(enumerate_types(5, (2, 2)))
        assert len(kinds) == num_types(5, 4)
        assert len({tuple(sorted(t.mass.items())) for t in kinds}) == len(kinds)

    def test_enumeration_budget(self):
        with pytest.raises(ResourceLimitError):
            list(enumerate_types(100, (4, 4, 4), budget=10))


class TestSampling:
    def test_deterministic(self):
        d = uniform_pair()
        assert sample_iid(d, 32, 7) == sample_iid(d, 32, 7)
        assert sample_iid(d, 32, 7) != sample_iid(d, 32, 8)

    def test_support_respected(self):
        d = uniform_pair()
        s = sample_iid(d, 200, 1)
        # the two rows are copies of each other in this source
        assert np.array_equal(s.row(1), s.row(2))

    def test_type_approaches_distribution(self):
        d = uniform_pair()
        s = sample_iid(d, 4000, 3)
        t = empirical_type(s, [1, 2])
        assert t.l1_distance(d) < 0.1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=40),
       st.lists(st.integers(0, 2), min_size=1, max_size=40))
def test_entropy_bounds(r1, r2):
    n = min(len(r1), len(r2))
    s = SequenceMatrix([r1[:n], r2[:n]], Alphabet((3, 3)))
    t = empirical_type(s, [1, 2])
    assert -1e-12 <= t.entropy() <= math.log2(9) + 1e-12
    # conditioning cannot raise entropy
    assert t.conditional_entropy([1], [2]) <= t.entropy([1]) + 1e-9
