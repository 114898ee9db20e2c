"""q-ary symmetric channel used for remote guidance messages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from goalcomm.constants import DEFAULT_ALPHABET, DEFAULT_SYMBOLS_PER_MESSAGE
from goalcomm.sim.rng import RngStream


@dataclass(frozen=True)
class DiscreteChannel:
    """``uses`` symbols per message over an alphabet of size ``q``.

    A symbol is received in error with probability ``epsilon``; a wrong
    symbol is uniform over the ``q - 1`` others.
    """

    q: int = DEFAULT_ALPHABET
    epsilon: float = 0.0
    uses: int = DEFAULT_SYMBOLS_PER_MESSAGE

    def __post_init__(self) -> None:
        if self.q < 2:
            raise ValueError(f"Alphabet size must be >= 2, got {self.q}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"Symbol error probability must lie in [0, 1), got {self.epsilon}")
        if self.uses < 1:
            raise ValueError(f"Channel uses per message must be >= 1, got {self.uses}")

    @property
    def message_capacity(self) -> int:
        """Number of distinct messages one block of ``uses`` symbols can carry."""
        return int(self.q**self.uses)

    @property
    def uniform_noise_epsilon(self) -> float:
        """Error probability at which the output is independent of the input."""
        return (self.q - 1) / self.q


def qsc_transmit(
    channel: DiscreteChannel, symbols: Sequence[int] | np.ndarray, rng: RngStream
) -> np.ndarray:
    """Pass ``symbols`` through the channel.

    One uniform and one offset draw are consumed per symbol regardless of
    ``epsilon``, so runs that differ only in ``epsilon`` share their noise.
    """
    sent = np.asarray(symbols, dtype=np.int64)
    if sent.size and (sent.min() < 0 or sent.max() >= channel.q):
        raise ValueError(f"Symbols must lie in [0, {channel.q})")
    flips = rng.random(sent.shape) < channel.epsilon
    offsets = rng.integers(1, channel.q, size=sent.shape)
    return np.where(flips, (sent + offsets) % channel.q, sent)


def message_to_symbols(message: int, q: int, uses: int) -> np.ndarray:
    """Base-``q`` digits of ``message``, most significant first."""
    if not 0 <= message < q**uses:
        raise ValueError(f"Message {message} does not fit in {uses} symbols of base {q}")
    digits = np.empty(uses, dtype=np.int64)
    for i in range(uses - 1, -1, -1):
        message, digits[i] = divmod(message, q)
    return digits


def symbols_to_message(symbols: Sequence[int] | np.ndarray, q: int) -> int:
    message = 0
    for s in np.asarray(symbols, dtype=np.int64):
        message = message * q + int(s)
    return message
