"""Block vector quantization for digital over-the-air aggregation."""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.cluster.vq import kmeans2

logger = logging.getLogger(__name__)

_MAGIC = b"GCCB"
_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True)
class Codebook:
    """``2 ** bits`` centroids in ``R ** block``."""

    centroids: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.centroids, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError(f"Centroids must be a non-empty 2-D array, got shape {c.shape}")
        size = c.shape[0]
        if size & (size - 1):
            raise ValueError(f"Codebook size must be a power of two, got {size}")
        object.__setattr__(self, "centroids", c)

    @property
    def block(self) -> int:
        return int(self.centroids.shape[1])

    @property
    def bits(self) -> int:
        return int(self.centroids.shape[0]).bit_length() - 1

    def __len__(self) -> int:
        return int(self.centroids.shape[0])

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(_MAGIC, self.block, self.bits)
        return header + self.centroids.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> Codebook:
        if len(data) < _HEADER.size:
            raise ValueError("Codebook data is shorter than its header")
        magic, block, bits = _HEADER.unpack_from(data)
        if magic != _MAGIC:
            raise ValueError(f"Not a codebook (magic {magic!r})")
        body = data[_HEADER.size :]
        expected = (2**bits) * block * 8
        if len(body) != expected:
            raise ValueError(f"Codebook body has {len(body)} bytes, expected {expected}")
        centroids = np.frombuffer(body, dtype="<f8").reshape(2**bits, block)
        return cls(centroids.copy())

    def save(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_bytes())
        logger.info("Saved %d-bit codebook (block %d) to %s", self.bits, self.block, path)
        return path

    @classmethod
    def load(cls, path: Path) -> Codebook:
        return cls.from_bytes(path.read_bytes())


def sign_codebook() -> Codebook:
    """Scalar one-bit codebook ``{-1, +1}``."""
    return Codebook(np.array([[-1.0], [1.0]]))


def _blocks(update: np.ndarray, block: int) -> np.ndarray:
    u = np.asarray(update, dtype=float).ravel()
    if u.size % block:
        raise ValueError(f"Update dimension {u.size} is not divisible by block length {block}")
    return u.reshape(-1, block)


def train_codebook(samples: np.ndarray, block: int, bits: int, seed: int) -> Codebook:
    """k-means codebook over the ``block``-length pieces of ``samples``.

    The same samples and seed always give the same codebook.
    """
    data = _blocks(np.asarray(samples), block)
    k = 2**bits
    if data.shape[0] < k:
        raise ValueError(
            f"Need at least {k} sample blocks to train {bits} bits, got {data.shape[0]}"
        )
    centroids, _ = kmeans2(data, k, minit="++", seed=np.random.default_rng(seed))
    logger.debug("Trained %d-centroid codebook on %d blocks", k, data.shape[0])
    return Codebook(centroids)


def quantize_vq(update: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Nearest centroid per block under squared error; ties go to the lowest index."""
    blocks = _blocks(update, codebook.block)
    distances = ((blocks[:, None, :] - codebook.centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(distances, axis=1)


def dequantize(indices: np.ndarray, codebook: Codebook) -> np.ndarray:
    return codebook.centroids[np.asarray(indices, dtype=np.int64)].ravel()


class ErrorFeedback:
    """Per-device quantization residuals carried into the next round."""

    def __init__(self, n_devices: int, dim: int) -> None:
        self.residuals = np.zeros((n_devices, dim))

    def quantize(self, device: int, update: np.ndarray, codebook: Codebook) -> np.ndarray:
        compensated = np.asarray(update, dtype=float) + self.residuals[device]
        indices = quantize_vq(compensated, codebook)
        self.residuals[device] = compensated - dequantize(indices, codebook)
        return indices
