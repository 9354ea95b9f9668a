import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rde.errors import InvalidArgumentError
from rde.hashing import (apply_hash, decode_row_bits, derive_rng,
                         encode_row_bits, enumerate_affine_space, gf2_nullspace,
                         gf2_rank, gf2_row_reduce, hash_bits, random_matrix)


class TestDeterminism:
    def test_same_seed_same_matrix(self):
        a = random_matrix(8, 20, 3, 1, 4)
        b = random_matrix(8, 20, 3, 1, 4)
        assert np.array_equal(a, b)

    def test_different_seed_differs(self):
        a = random_matrix(8, 20, 3, 1, 4)
        b = random_matrix(8, 20, 3, 1, 5)
        assert not np.array_equal(a, b)

    def test_derive_rng_streams_independent(self):
        assert derive_rng(1, 2).integers(0, 1 << 30) != \
            derive_rng(2, 1).integers(0, 1 << 30)


class TestBitCodec:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 7), min_size=1, max_size=30))
    def test_roundtrip(self, row):
        row = np.array(row)
        bits = encode_row_bits(row, 3)
        assert bits.size == row.size * 3
        assert np.array_equal(decode_row_bits(bits, 3), row)

    def test_batch_decode(self):
        rows = np.array([[0, 1], [3, 2]])
        bits = np.stack([encode_row_bits(r, 2) for r in rows])
        assert np.array_equal(decode_row_bits(bits, 2), rows)


class TestUniversality:
    def test_collision_rate(self):
        # distinct inputs collide with probability 2^-bits
        rng = np.random.default_rng(5)
        nbits, trials, hits = 6, 2000, 0
        for t in range(trials):
            x = rng.integers(0, 2, 24)
            y = x.copy()
            y[rng.integers(0, 24)] ^= 1
            m = random_matrix(nbits, 24, 77, t)
            hits += np.array_equal(apply_hash(m, x), apply_hash(m, y))
        p = hits / trials
        expected = 2.0 ** -nbits
        sigma = (expected * (1 - expected) / trials) ** 0.5
        assert abs(p - expected) <= 4 * sigma + 1e-9

    def test_hash_bits_depends_on_row(self):
        a = hash_bits(np.array([0, 1, 1, 0]), 1, 4, 9)
        b = hash_bits(np.array([0, 1, 1, 1]), 1, 4, 9)
        assert a.shape == (4,)
        assert not np.array_equal(a, b)

    def test_zero_bits(self):
        assert hash_bits(np.array([1, 0]), 1, 0, 1).size == 0


class TestGF2:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 9), st.integers(1, 12))
    def test_nullspace_properties(self, seed, rows, cols):
        m = random_matrix(rows, cols, seed)
        basis = gf2_nullspace(m, cols)
        assert gf2_rank(m) + basis.shape[0] == cols
        for v in basis:
            assert not apply_hash(m, v).any()
        # basis vectors are linearly independent over GF(2)
        assert gf2_rank(basis) == basis.shape[0]

    def test_row_reduce_pivots(self):
        m = np.array([[1, 1, 0], [1, 1, 1]], dtype=np.uint8)
        reduced, pivots = gf2_row_reduce(m)
        assert pivots == [0, 2]
        assert reduced[0, 2] == 0

    def test_empty_matrix_full_nullspace(self):
        basis = gf2_nullspace(np.zeros((0, 4), dtype=np.uint8), 4)
        assert basis.shape == (4, 4)


class TestAffineSpace:
    def test_enumeration_is_exact_coset(self):
        m = random_matrix(3, 8, 11)
        x = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
        target = apply_hash(m, x)
        coset = enumerate_affine_space(x, gf2_nullspace(m, 8))
        # every element hashes alike, no duplicates, and the count matches
        assert len({tuple(r) for r in coset}) == coset.shape[0]
        assert coset.shape[0] == 2 ** (8 - gf2_rank(m))
        for row in coset:
            assert np.array_equal(apply_hash(m, row), target)

    def test_dimension_guard(self):
        with pytest.raises(InvalidArgumentError):
            enumerate_affine_space(np.zeros(30, dtype=np.uint8),
                                   np.eye(30, dtype=np.uint8))
