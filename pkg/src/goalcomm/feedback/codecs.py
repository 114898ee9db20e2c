"""Downlink acknowledgment codecs: telling K of N users that their packet arrived.

``concat`` lists the IDs verbatim, ``enumerative`` sends the rank of the
acknowledged subset (the shortest error-free code), and ``hashsig`` and
``bloom`` trade a controlled false-alarm rate for shorter messages. Only
``bits`` counts towards the message length ``B``; the count ``K``, seeds and
salts travel in the header.
"""

from __future__ import annotations

import logging
import math
import struct
from bisect import bisect_left
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Literal

import numpy as np
from bitarray import bitarray, frozenbitarray
from bitarray.util import ba2int, int2ba
from scipy.special import gammaln

from goalcomm.constants import HASHSIG_MAX_ATTEMPTS, HASHSIG_SLACK, K_MAX, POPULATION
from goalcomm.feedback.hashing import (
    double_hash,
    fingerprint,
    hash_seed,
    row_mask,
    row_vector,
    solve_gf2,
)

logger = logging.getLogger(__name__)

SchemeName = Literal["concat", "enumerative", "hashsig", "bloom"]
FEEDBACK_SCHEMES: tuple[str, ...] = ("concat", "enumerative", "hashsig", "bloom")
_TAGS = {name: i for i, name in enumerate(FEEDBACK_SCHEMES)}
_WIRE = struct.Struct("<BQIQIIdI")


class FeedbackError(ValueError):
    """Invalid acknowledgment set or malformed feedback message."""


@dataclass(frozen=True)
class AckSet:
    ids: tuple[int, ...]
    population: int = POPULATION
    k_max: int = K_MAX

    def __post_init__(self) -> None:
        if len(self.ids) > self.k_max:
            raise FeedbackError(f"K={len(self.ids)} exceeds K_max={self.k_max}")
        for a, b in zip(self.ids, self.ids[1:]):
            if a >= b:
                raise FeedbackError(f"IDs must be strictly increasing ({a} before {b})")
        if self.ids and (self.ids[0] < 0 or self.ids[-1] >= self.population):
            raise FeedbackError(f"IDs must lie in [0, {self.population})")

    @classmethod
    def of(
        cls, ids: Iterable[int], population: int = POPULATION, k_max: int = K_MAX
    ) -> AckSet:
        values = [int(i) for i in ids]
        if len(set(values)) != len(values):
            raise FeedbackError("Acknowledgment set contains duplicate IDs")
        return cls(tuple(sorted(values)), population, k_max)

    @property
    def k(self) -> int:
        return len(self.ids)

    @property
    def id_bits(self) -> int:
        return max(1, (self.population - 1).bit_length())

    def __contains__(self, user: object) -> bool:
        if not isinstance(user, int):
            return False
        i = bisect_left(self.ids, user)
        return i < len(self.ids) and self.ids[i] == user


@dataclass(frozen=True)
class EncodedFeedback:
    scheme: str
    bits: frozenbitarray
    k: int
    population: int = POPULATION
    eps: float = 0.0
    seed: int = 0
    salt: int = 0
    hashes: int = 0

    @property
    def length(self) -> int:
        """Message length ``B`` in bits."""
        return len(self.bits)

    @property
    def header_bits(self) -> int:
        """Bits of the fixed K field carried outside ``B``."""
        return (K_MAX).bit_length()

    def to_bytes(self) -> bytes:
        header = _WIRE.pack(
            _TAGS[self.scheme],
            self.population,
            self.k,
            self.seed,
            self.salt,
            self.hashes,
            self.eps,
            len(self.bits),
        )
        return header + self.bits.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> EncodedFeedback:
        if len(data) < _WIRE.size:
            raise FeedbackError("Feedback message is shorter than its header")
        tag, population, k, seed, salt, hashes, eps, length = _WIRE.unpack_from(data)
        if tag >= len(FEEDBACK_SCHEMES):
            raise FeedbackError(f"Unknown scheme tag {tag}")
        body = data[_WIRE.size :]
        if len(body) != (length + 7) // 8:
            raise FeedbackError(f"Body has {len(body)} bytes for {length} bits")
        bits = bitarray()
        bits.frombytes(body)
        return cls(
            FEEDBACK_SCHEMES[tag],
            frozenbitarray(bits[:length]),
            k,
            population,
            eps,
            seed,
            salt,
            hashes,
        )


def fingerprint_bits(eps: float) -> int:
    """Smallest ``f`` with ``2 ** -f <= eps``."""
    if not 0.0 < eps < 1.0:
        raise FeedbackError(f"False-alarm probability must lie in (0, 1), got {eps}")
    return max(1, math.ceil(math.log2(1.0 / eps) - 1e-12))


def enumerative_bits(population: int, k: int) -> int:
    return (math.comb(population, k) - 1).bit_length()


def bloom_parameters(k: int, eps: float) -> tuple[int, int]:
    """Filter size ``m`` and hash count for ``k`` members at false-alarm rate ``eps``."""
    fingerprint_bits(eps)
    if k == 0:
        return 0, 0
    m = math.ceil(1.44 * k * math.log2(1.0 / eps))
    return m, max(1, round(m / k * math.log(2)))


def hashsig_rows(k: int) -> int:
    return k + HASHSIG_SLACK


# Combinatorial number system (colex order)


def rank_subset(ids: Iterable[int]) -> int:
    return sum(math.comb(c, i) for i, c in enumerate(ids, start=1))


def _largest_below(rank: int, i: int, upper: int) -> int:
    """Largest ``c < upper`` with ``comb(c, i) <= rank``."""
    if rank == 0:
        return i - 1
    lo, hi = i - 1, upper - 1
    target = math.log(rank)
    # float estimate from log-binomials, then exact galloping and bisection
    a, b = float(lo), float(hi)
    for _ in range(64):
        mid = 0.5 * (a + b)
        if gammaln(mid + 1) - gammaln(i + 1) - gammaln(mid - i + 1) <= target:
            a = mid
        else:
            b = mid
    guess = min(max(int(a), lo), hi)
    step = 1
    if math.comb(guess, i) <= rank:
        lo = guess
        while lo + step <= hi and math.comb(lo + step, i) <= rank:
            lo += step
            step *= 2
        hi = min(hi, lo + step)
    else:
        hi = guess - 1
        while hi - step >= lo and math.comb(hi - step, i) > rank:
            hi -= step
            step *= 2
        lo = max(lo, hi - step)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if math.comb(mid, i) <= rank:
            lo = mid
        else:
            hi = mid - 1
    return lo


def unrank_subset(rank: int, k: int, population: int) -> tuple[int, ...]:
    if not 0 <= rank < math.comb(population, k):
        raise FeedbackError(f"Rank {rank} is out of range for {k}-subsets of {population}")
    ids = []
    upper = population
    for i in range(k, 0, -1):
        c = _largest_below(rank, i, upper)
        ids.append(c)
        rank -= math.comb(c, i)
        upper = c
    return tuple(reversed(ids))


# Encoders


def _encode_concat(ack: AckSet) -> bitarray:
    bits = bitarray()
    for user in ack.ids:
        bits.extend(int2ba(user, length=ack.id_bits))
    return bits


def _encode_enumerative(ack: AckSet) -> bitarray:
    length = enumerative_bits(ack.population, ack.k)
    if length == 0:
        return bitarray()
    return int2ba(rank_subset(ack.ids), length=length)


def _encode_hashsig(ack: AckSet, eps: float, seed: int) -> tuple[bitarray, int]:
    f = fingerprint_bits(eps)
    rows = hashsig_rows(ack.k)
    for salt in range(HASHSIG_MAX_ATTEMPTS):
        row_seed = hash_seed(seed, "hashsig", "row", salt)
        fp_seed = hash_seed(seed, "hashsig", "fp", salt)
        equations = [
            (row_vector(u, rows, row_seed), fingerprint(u, f, fp_seed)) for u in ack.ids
        ]
        table = solve_gf2(equations, rows)
        if table is not None:
            bits = bitarray()
            for entry in table:
                bits.extend(int2ba(entry, length=f))
            return bits, salt
        logger.debug("Signature table for K=%d unsolvable with salt %d, retrying", ack.k, salt)
    raise FeedbackError(f"No solvable signature table after {HASHSIG_MAX_ATTEMPTS} salts")


def _bloom_positions(user: int, m: int, hashes: int, seed: int) -> list[int]:
    h1, h2 = double_hash(user, hash_seed(seed, "bloom"))
    return [(h1 + i * h2) % m for i in range(hashes)]


def _encode_bloom(ack: AckSet, eps: float, seed: int) -> tuple[bitarray, int]:
    m, hashes = bloom_parameters(ack.k, eps)
    bits = bitarray(m)
    bits.setall(0)
    for user in ack.ids:
        for pos in _bloom_positions(user, m, hashes, seed):
            bits[pos] = 1
    return bits, hashes


def encode(
    scheme: str, ack: AckSet, seed: int = 0, eps: float | None = None
) -> EncodedFeedback:
    """Encode the acknowledged set; ``eps`` is required by the false-alarm schemes."""
    if scheme == "concat":
        bits, salt, hashes, eps = _encode_concat(ack), 0, 0, 0.0
    elif scheme == "enumerative":
        bits, salt, hashes, eps = _encode_enumerative(ack), 0, 0, 0.0
    elif scheme in ("hashsig", "bloom"):
        if eps is None:
            raise FeedbackError(f"Scheme '{scheme}' needs a false-alarm probability")
        if scheme == "hashsig":
            bits, salt = _encode_hashsig(ack, eps, seed)
            hashes = 0
        else:
            bits, hashes = _encode_bloom(ack, eps, seed)
            salt = 0
    else:
        raise FeedbackError(f"Unknown feedback scheme '{scheme}'")
    return EncodedFeedback(
        scheme, frozenbitarray(bits), ack.k, ack.population, eps, seed, salt, hashes
    )


# Decoders


@lru_cache(maxsize=64)
def _decoded_ids(
    scheme: str, bits: frozenbitarray, k: int, population: int
) -> frozenset[int]:
    if scheme == "concat":
        width = max(1, (population - 1).bit_length())
        if len(bits) != k * width:
            raise FeedbackError(
                f"Concatenation of {k} IDs needs {k * width} bits, got {len(bits)}"
            )
        return frozenset(ba2int(bits[i * width : (i + 1) * width]) for i in range(k))
    if len(bits) != enumerative_bits(population, k):
        raise FeedbackError(
            f"Enumerative code for K={k} needs {enumerative_bits(population, k)} bits, "
            f"got {len(bits)}"
        )
    rank = ba2int(bits) if len(bits) else 0
    return frozenset(unrank_subset(rank, k, population))


def decode_ack_set(feedback: EncodedFeedback) -> AckSet:
    """Recover the exact set from an error-free code."""
    if feedback.scheme not in ("concat", "enumerative"):
        raise FeedbackError(f"Scheme '{feedback.scheme}' does not carry the set itself")
    ids = _decoded_ids(feedback.scheme, feedback.bits, feedback.k, feedback.population)
    return AckSet(tuple(sorted(ids)), feedback.population, max(K_MAX, feedback.k))


@lru_cache(maxsize=64)
def _signature_table(bits: frozenbitarray, rows: int, f: int) -> np.ndarray:
    if len(bits) != rows * f:
        raise FeedbackError(f"Signature table needs {rows * f} bits, got {len(bits)}")
    return np.array(
        [ba2int(bits[i * f : (i + 1) * f]) for i in range(rows)], dtype=np.uint64
    )


def decode_membership(feedback: EncodedFeedback, user: int) -> bool:
    """Whether ``user`` reads the message as an acknowledgment.

    Acknowledged users always do; under ``hashsig`` and ``bloom`` other users
    may too, with probability close to ``eps``.
    """
    scheme = feedback.scheme
    if scheme in ("concat", "enumerative"):
        return user in _decoded_ids(scheme, feedback.bits, feedback.k, feedback.population)
    if scheme == "hashsig":
        f = fingerprint_bits(feedback.eps)
        rows = hashsig_rows(feedback.k)
        table = _signature_table(feedback.bits, rows, f)
        row_seed = hash_seed(feedback.seed, "hashsig", "row", feedback.salt)
        fp_seed = hash_seed(feedback.seed, "hashsig", "fp", feedback.salt)
        mask = row_mask(row_vector(user, rows, row_seed), rows)
        value = int(np.bitwise_xor.reduce(table[mask])) if mask.any() else 0
        return value == fingerprint(user, f, fp_seed)
    if scheme == "bloom":
        m = len(feedback.bits)
        if m == 0:
            return False
        positions = _bloom_positions(user, m, feedback.hashes, feedback.seed)
        return all(feedback.bits[pos] for pos in positions)
    raise FeedbackError(f"Unknown feedback scheme '{scheme}'")


def bounds(population: int, k: int, eps: float) -> dict[str, int]:
    """Message lengths of concatenation, the error-free optimum and the false-alarm bound."""
    if k < 1:
        raise FeedbackError(f"K must be >= 1, got {k}")
    id_bits = max(1, (population - 1).bit_length())
    return {
        "B_concat": id_bits * k,
        "B_errorfree": enumerative_bits(population, k),
        "B_fa": math.ceil(k * math.log2(1.0 / eps)),
    }
