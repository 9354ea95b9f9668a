"""Seeded 2-universal hashing of sequence rows, plus GF(2) helpers.

A hash is a random binary matrix applied to the fixed-width bit encoding
of an entire length-n row.  For distinct rows the difference vector is
nonzero, so the output difference is uniform over the output space and the
collision probability is exactly 2^-bits: the family is 2-universal.

Matrices are derived deterministically from integer seed material, so a
run is reproducible from its master seed and every matrix can be
regenerated genie-side for collision analysis.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError


def derive_rng(*material: int) -> np.random.Generator:
    """A generator keyed by a tuple of nonnegative integers."""
    return np.random.default_rng([int(x) & 0x7FFFFFFF for x in material])


def random_matrix(nbits: int, ncols: int, *seed_material: int) -> np.ndarray:
    """A fresh nbits x ncols binary matrix from the seed material."""
    if nbits < 0:
        raise InvalidArgumentError("nbits must be >= 0")
    rng = derive_rng(*seed_material)
    return rng.integers(0, 2, size=(nbits, ncols), dtype=np.uint8)


def encode_row_bits(row: np.ndarray, symbol_bits: int) -> np.ndarray:
    """Fixed-width binary encoding of a symbol row, most significant first."""
    row = np.asarray(row, dtype=np.int64)
    out = np.empty(row.size * symbol_bits, dtype=np.uint8)
    for b in range(symbol_bits):
        out[b::symbol_bits] = (row >> (symbol_bits - 1 - b)) & 1
    return out


def decode_row_bits(bits: np.ndarray, symbol_bits: int) -> np.ndarray:
    """Inverse of encode_row_bits; bits may be 1-D or (k, n*symbol_bits)."""
    bits = np.asarray(bits, dtype=np.int64)
    single = bits.ndim == 1
    if single:
        bits = bits[None, :]
    n = bits.shape[1] // symbol_bits
    rows = np.zeros((bits.shape[0], n), dtype=np.int64)
    for b in range(symbol_bits):
        rows = (rows << 1) | bits[:, b::symbol_bits]
    return rows[0] if single else rows


def apply_hash(matrix: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """matrix @ bits over GF(2); bits may be a vector or a (k, ncols) batch."""
    if matrix.shape[0] == 0:
        return np.zeros((0,) if bits.ndim == 1 else (bits.shape[0], 0),
                        dtype=np.uint8)
    if bits.ndim == 1:
        return (matrix.astype(np.int64) @ bits.astype(np.int64) % 2).astype(np.uint8)
    return (bits.astype(np.int64) @ matrix.T.astype(np.int64) % 2).astype(np.uint8)


def hash_bits(row: np.ndarray, symbol_bits: int, nbits: int,
              *seed_material: int) -> np.ndarray:
    """Hash one row to ``nbits`` bits; deterministic given the seed material."""
    bits = encode_row_bits(row, symbol_bits)
    matrix = random_matrix(nbits, bits.size, *seed_material)
    return apply_hash(matrix, bits)


def gf2_row_reduce(matrix: np.ndarray):
    """Row-reduce over GF(2); returns (reduced matrix, pivot column list)."""
    mat = np.array(matrix, dtype=np.uint8) % 2
    rows, cols = mat.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hit = np.nonzero(mat[r:, c])[0]
        if hit.size == 0:
            continue
        pivot = r + hit[0]
        if pivot != r:
            mat[[r, pivot]] = mat[[pivot, r]]
        mask = mat[:, c].copy()
        mask[r] = 0
        mat[mask == 1] ^= mat[r]
        pivots.append(c)
        r += 1
    return mat, pivots


def gf2_rank(matrix: np.ndarray) -> int:
    if matrix.size == 0:
        return 0
    return len(gf2_row_reduce(matrix)[1])


def gf2_nullspace(matrix: np.ndarray, ncols: int) -> np.ndarray:
    """A basis (d x ncols) of the right null space of ``matrix`` over GF(2)."""
    if matrix.shape[0] == 0:
        return np.eye(ncols, dtype=np.uint8)
    reduced, pivots = gf2_row_reduce(matrix)
    free = [c for c in range(ncols) if c not in pivots]
    basis = np.zeros((len(free), ncols), dtype=np.uint8)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for r, pc in enumerate(pivots):
            if reduced[r, fc]:
                basis[k, pc] = 1
    return basis


def enumerate_affine_space(offset: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """All 2^d elements offset + span(basis) as a (2^d, ncols) uint8 array."""
    d = basis.shape[0]
    if d == 0:
        return offset[None, :].astype(np.uint8)
    if d > 26:
        raise InvalidArgumentError(f"affine space of dimension {d} too large")
    coeffs = np.arange(1 << d, dtype=np.uint32)
    combo = np.zeros(((1 << d), basis.shape[1]), dtype=np.uint8)
    for k in range(d):
        sel = (coeffs >> k) & 1
        combo ^= np.outer(sel.astype(np.uint8), basis[k])
    return combo ^ offset.astype(np.uint8)
