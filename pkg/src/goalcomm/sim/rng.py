"""Named, counter-based random streams derived from a single root seed."""

from __future__ import annotations

import hashlib
from typing import Any

import numpy as np


def derive_seed(root_seed: int, *labels: object) -> int:
    """Derive a 64-bit seed from a root seed and a label path.

    Uses a stable cryptographic digest (never Python's per-process ``hash()``).
    """
    text = ":".join([str(int(root_seed))] + [str(label) for label in labels])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _philox_key(root_seed: int, name: str) -> int:
    text = f"{int(root_seed)}/{name}"
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=16).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """A reproducible random stream keyed by ``(root_seed, name)``.

    Backed by NumPy's Philox counter-based generator: the key is a digest of
    the root seed and the stream name, and the counter starts at zero, so the
    same pair yields the same draws on every run and platform. All
    ``numpy.random.Generator`` methods are available on the stream.
    """

    def __init__(self, root_seed: int, name: str) -> None:
        if not name:
            raise ValueError("Stream name must be non-empty")
        self.root_seed = int(root_seed)
        self.name = name
        self._generator = np.random.Generator(np.random.Philox(key=_philox_key(root_seed, name)))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def spawn(self, child: str) -> RngStream:
        """Independent child stream named ``<name>/<child>``."""
        return RngStream(self.root_seed, f"{self.name}/{child}")

    def __getattr__(self, item: str) -> Any:
        if item.startswith("_"):
            raise AttributeError(item)
        return getattr(self._generator, item)

    def __repr__(self) -> str:
        return f"RngStream(root_seed={self.root_seed}, name={self.name!r})"
