"""Secret key extraction from recovered omniscience data.

After the exchange succeeds every party holds the full matrix, whose
randomness exceeds what the public transcript reveals by roughly
n·H(type) minus the transcript length.  Each party hashes its recovered
matrix down to a key length chosen from its own type estimate so that the
leftover-hash bound keeps the key within statistical distance δ of an
independent uniform string.  The achievable key rate approaches
H(X_M) − R_CO, the gap between total randomness and the minimum
communication for omniscience.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import JointDistribution, SequenceMatrix
from .errors import InvalidArgumentError
from .hashing import apply_hash, encode_row_bits, random_matrix
from .monitor import type_of_rows
from .protocol import ProtocolConfig, RunReport, run_exchange
from .region import rco_partition_max


def sk_capacity(dist: JointDistribution) -> float:
    """Maximum key bits per symbol: joint entropy minus the minimum
    omniscience sum-rate."""
    value, _ = rco_partition_max(dist, dist.parties)
    cap = dist.entropy() - value
    if cap < -1e-9:
        raise InvalidArgumentError(
            f"negative capacity {cap}; inconsistent inputs")
    return max(0.0, cap)


def key_length(type_dist: JointDistribution, ell: float, delta_sec: float,
               eps_n: float) -> int:
    """Key bits extractable from a block with the given type when ``ell``
    transcript bits were made public.

    max(0, ⌊nH(P) − ell − |X| log2(n+1) − 2 log2(1/(δ−2ε)) + 2⌋); the
    |X| log2(n+1) term covers the gap between min-entropy given the type
    and n times its entropy.
    """
    if type_dist.denominator is None:
        raise InvalidArgumentError("key_length needs an empirical type")
    if delta_sec <= 2 * eps_n:
        raise InvalidArgumentError(
            f"secrecy target {delta_sec} must exceed twice the error bound "
            f"{eps_n}")
    n = type_dist.denominator
    support = type_dist.support_size()
    k = math.floor(n * type_dist.entropy() - ell
                   - support * math.log2(n + 1)
                   - 2 * math.log2(1.0 / (delta_sec - 2 * eps_n)) + 2)
    return max(0, k)


def leftover_hash_bound(min_entropy: float, side_info_bits: float,
                        k: int) -> float:
    """Statistical distance of a k-bit 2-universal hash of a source with
    the given min-entropy from uniform, to an observer of the side info."""
    if min_entropy < 0 or side_info_bits < 0 or k < 0:
        raise InvalidArgumentError("all arguments must be >= 0")
    return 0.5 * 2.0 ** ((side_info_bits + k - min_entropy) / 2.0)


def extract_key(recovered: SequenceMatrix, k: int, seed: int) -> np.ndarray:
    """Hash the whole recovered matrix to k bits; deterministic per seed."""
    if k < 0:
        raise InvalidArgumentError("k must be >= 0")
    if k == 0:
        return np.zeros(0, dtype=np.uint8)
    chunks = [encode_row_bits(recovered.row(i),
                              recovered.alphabet.bits_per_symbol(i))
              for i in range(1, recovered.m + 1)]
    bits = np.concatenate(chunks)
    matrix = random_matrix(k, bits.size, seed, 0x5ECB)
    return apply_hash(matrix, bits)


@dataclass
class KeyMaterial:
    k: int
    delta_sec: float
    eps_n: float
    agreement: bool
    secrecy_bound: float        # 2ε + leftover-hash term for this block
    keys: dict = field(default_factory=dict, repr=False)
    per_party_k: dict = field(default_factory=dict)


def run_sk(seqs: SequenceMatrix, config: ProtocolConfig, seed: int,
           delta_sec: float, eps_n: float) -> tuple[KeyMaterial, RunReport]:
    """Exchange then per-party key extraction.

    Each party computes its key length from its own recovered type and the
    actual transcript length, then hashes its recovered matrix.  The
    agreement flag is a genie-side check that all keys match.
    """
    report = run_exchange(seqs, config, seed)
    if report.outcome != "omniscience":
        material = KeyMaterial(k=0, delta_sec=delta_sec, eps_n=eps_n,
                               agreement=False, secrecy_bound=1.0)
        return material, report
    ell = report.total_bits
    keys, lengths = {}, {}
    for j in range(1, seqs.m + 1):
        rows = report.recovered[j]
        dist = type_of_rows({i: rows[i] for i in range(1, seqs.m + 1)},
                            seqs.alphabet)
        k_j = key_length(dist, ell, delta_sec, eps_n)
        matrix = SequenceMatrix(
            np.stack([rows[i] for i in range(1, seqs.m + 1)]), seqs.alphabet)
        keys[j] = extract_key(matrix, k_j, seed)
        lengths[j] = k_j
    ks = set(lengths.values())
    agreement = (len(ks) == 1 and all(
        np.array_equal(keys[1], keys[j]) for j in keys))
    k = lengths[1]
    true_type = type_of_rows(
        {i: seqs.row(i) for i in range(1, seqs.m + 1)}, seqs.alphabet)
    min_entropy = (seqs.n * true_type.entropy()
                   - true_type.support_size() * math.log2(seqs.n + 1))
    # an empty key is trivially uniform; the hash term applies only for k > 0
    bound = 2 * eps_n + (leftover_hash_bound(max(0.0, min_entropy), ell, k)
                         if k > 0 else 0.0)
    material = KeyMaterial(k=k, delta_sec=delta_sec, eps_n=eps_n,
                           agreement=agreement, secrecy_bound=bound,
                           keys=keys, per_party_k=lengths)
    return material, report
