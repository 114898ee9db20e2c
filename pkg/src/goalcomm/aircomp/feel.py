"""Aggregation schemes for federated edge learning rounds."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from goalcomm.aircomp.codebook import Codebook
from goalcomm.channels.mac import GaussianMAC, mac_superpose
from goalcomm.constants import SIGNATURE_LENGTH
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)

Detector = Literal["genie", "matched_filter"]
SignatureKind = Literal["gaussian", "orthogonal"]


def _stack(updates: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    u = np.atleast_2d(np.asarray(updates, dtype=float))
    if u.size == 0:
        raise ValueError("A round needs at least one device update")
    return u


def majority_sign(x: np.ndarray) -> np.ndarray:
    """``sign`` with ``sign(0) = +1``."""
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def feel_round_pa(updates: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Perfect aggregation: the exact mean over a noise-free channel."""
    return _stack(updates).mean(axis=0)


def feel_round_analog(
    updates: Sequence[np.ndarray] | np.ndarray, mac: GaussianMAC, rng: RngStream
) -> np.ndarray:
    u = _stack(updates)
    return mac_superpose(mac, u, rng).received / u.shape[0]


def feel_round_obda(
    updates: Sequence[np.ndarray] | np.ndarray,
    mac: GaussianMAC,
    rng: RngStream,
    lr: float = 1.0,
) -> np.ndarray:
    """One-bit aggregation: devices send signs, the server keeps the sign of the sum."""
    signs = majority_sign(_stack(updates))
    return lr * majority_sign(mac_superpose(mac, signs, rng).received)


@dataclass(frozen=True)
class GdoacResult:
    aggregate: np.ndarray
    counts: np.ndarray  # (blocks, codebook size)


def _signatures(
    kind: SignatureKind, length: int, size: int, blocks: int, rng: RngStream
) -> np.ndarray:
    """Unit-norm signature columns, one ``(length, size)`` matrix per block."""
    if kind == "gaussian":
        s = rng.standard_normal((blocks, length, size))
        return s / np.linalg.norm(s, axis=1, keepdims=True)
    if kind == "orthogonal":
        if size > length:
            raise ValueError(f"Cannot build {size} orthogonal signatures of length {length}")
        return np.stack(
            [np.linalg.qr(rng.standard_normal((length, size)))[0] for _ in range(blocks)]
        )
    raise ValueError(f"Unknown signature kind '{kind}'")


def gdoac_round(
    indices: Sequence[Sequence[int]] | np.ndarray,
    codebook: Codebook,
    detector: Detector = "genie",
    mac: GaussianMAC | None = None,
    rng: RngStream | None = None,
    signatures: SignatureKind = "gaussian",
    signature_length: int = SIGNATURE_LENGTH,
) -> GdoacResult:
    """Aggregate quantized updates from how many devices sent each codeword.

    ``indices`` holds one row of block indices per device. The server only
    needs the multiplicity of every codeword per block: the genie detector
    counts exactly, the matched filter superposes one signature per device
    over the MAC, correlates with every signature and rounds.
    """
    idx = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    n_devices, blocks = idx.shape
    size = len(codebook)
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise ValueError(f"Codeword indices must lie in [0, {size})")

    if detector == "genie":
        counts = np.zeros((blocks, size), dtype=np.int64)
        for b in range(blocks):
            counts[b] = np.bincount(idx[:, b], minlength=size)
    elif detector == "matched_filter":
        if mac is None or rng is None:
            raise ValueError("Matched-filter detection needs a MAC and a random stream")
        sigs = _signatures(signatures, signature_length, size, blocks, rng.spawn("signatures"))
        counts = np.zeros((blocks, size), dtype=np.int64)
        noise_rng = rng.spawn("noise")
        for b in range(blocks):
            sent = sigs[b][:, idx[:, b]].T
            received = mac_superpose(mac, sent, noise_rng).received
            counts[b] = np.clip(np.rint(sigs[b].T @ received), 0, None).astype(np.int64)
    else:
        raise ValueError(f"Unknown detector '{detector}'")

    aggregate = (counts @ codebook.centroids) / n_devices
    if detector == "matched_filter":
        wrong = int(np.abs(counts.sum(axis=1) - n_devices).sum())
        if wrong:
            logger.debug("Matched filter miscounted %d codewords", wrong)
    return GdoacResult(aggregate=aggregate.ravel(), counts=counts)


def obda_learning_rate(round_index: int, base: float = 0.02) -> float:
    return base / math.sqrt(round_index + 1)
