"""Seeded MurmurHash3 helpers and the GF(2) solver behind signature tables."""

from __future__ import annotations

import mmh3
import numpy as np

from goalcomm.sim.rng import derive_seed

_MASK32 = 0xFFFFFFFF


def hash_seed(seed: int, *labels: object) -> int:
    """32-bit MurmurHash3 seed derived from ``seed`` and a label path."""
    return derive_seed(seed, *labels) & _MASK32


def _key(user: int) -> bytes:
    return int(user).to_bytes(8, "little")


def double_hash(user: int, seed32: int) -> tuple[int, int]:
    """Two independent 64-bit hashes for ``h1 + i * h2`` probing."""
    h1, h2 = mmh3.hash64(_key(user), seed32, signed=False)
    return h1, h2 | 1


def fingerprint(user: int, bits: int, seed32: int) -> int:
    if not 0 < bits <= 64:
        raise ValueError(f"Fingerprint width must lie in (0, 64], got {bits}")
    return mmh3.hash64(_key(user), seed32, signed=False)[0] & ((1 << bits) - 1)


def row_vector(user: int, width: int, seed32: int) -> int:
    """Pseudo-random ``width``-bit row, built from 128-bit hash chunks."""
    value = 0
    chunk = 0
    while chunk * 128 < width:
        word = mmh3.hash128(_key(user) + chunk.to_bytes(4, "little"), seed32, signed=False)
        value |= word << (128 * chunk)
        chunk += 1
    return value & ((1 << width) - 1)


def row_mask(row: int, width: int) -> np.ndarray:
    nbytes = (width + 7) // 8
    raw = np.frombuffer(row.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:width].astype(bool)


def solve_gf2(equations: list[tuple[int, int]], width: int) -> list[int] | None:
    """Solve ``XOR_{j in row} x_j = rhs`` over GF(2) for ``width`` unknowns.

    Each equation is ``(row bitmask, rhs)`` with an integer right-hand side
    treated as a vector of independent bits. Free unknowns are zero.
    Returns ``None`` when the system is inconsistent.
    """
    pivots: dict[int, tuple[int, int]] = {}
    for row, rhs in equations:
        while row:
            top = row.bit_length() - 1
            if top not in pivots:
                pivots[top] = (row, rhs)
                break
            prow, prhs = pivots[top]
            row ^= prow
            rhs ^= prhs
        else:
            if rhs:
                return None

    solution = [0] * width
    for top in sorted(pivots):
        row, rhs = pivots[top]
        rest = row ^ (1 << top)
        while rest:
            low = rest & -rest
            rhs ^= solution[low.bit_length() - 1]
            rest ^= low
        solution[top] = rhs
    return solution
