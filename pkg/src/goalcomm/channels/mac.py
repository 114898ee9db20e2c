"""Gaussian multiple-access channel with truncated channel inversion."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)


class PowerLimitError(ValueError):
    """A device would need more than ``p_max`` mean power after inversion."""


@dataclass(frozen=True)
class GaussianMAC:
    """``y = sum_n h_n s_n x_n + z`` with ``s_n = 1 / h_n`` for ``|h_n| >= threshold``."""

    n_devices: int
    gains: tuple[float, ...] = ()
    noise_var: float = 0.0
    p_max: float = math.inf
    threshold: float = 0.0

    def __post_init__(self) -> None:
        if self.n_devices < 1:
            raise ValueError(f"n_devices must be >= 1, got {self.n_devices}")
        if not self.gains:
            object.__setattr__(self, "gains", (1.0,) * self.n_devices)
        if len(self.gains) != self.n_devices:
            raise ValueError(f"Expected {self.n_devices} gains, got {len(self.gains)}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")
        if self.p_max <= 0:
            raise ValueError(f"p_max must be > 0, got {self.p_max}")
        if self.threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")

    def with_noise(self, noise_var: float) -> GaussianMAC:
        return GaussianMAC(self.n_devices, self.gains, noise_var, self.p_max, self.threshold)

    def excluded(self) -> frozenset[int]:
        return frozenset(n for n, h in enumerate(self.gains) if abs(h) < self.threshold)


@dataclass(frozen=True)
class MacOutput:
    received: np.ndarray
    included: tuple[int, ...]
    excluded: tuple[int, ...] = field(default=())


def mac_superpose(
    mac: GaussianMAC,
    vectors: Sequence[Sequence[float]] | np.ndarray,
    rng: RngStream,
    devices: Sequence[int] | None = None,
) -> MacOutput:
    """Superpose one vector per active device and add receiver noise.

    ``devices`` names the transmitting device for each row of ``vectors``
    (default: rows ``0..len(vectors)-1``). The noise draw is made even when
    ``noise_var`` is zero.

    Raises:
        PowerLimitError: an included device needs more than ``p_max``, or has
            zero gain while ``threshold`` is zero.
    """
    rows = [np.asarray(v, dtype=float) for v in vectors]
    if not rows:
        raise ValueError("mac_superpose needs at least one transmitting device")
    dim = rows[0].shape
    for n, row in enumerate(rows):
        if row.shape != dim:
            raise ValueError(f"Vector {n} has shape {row.shape}, expected {dim}")
    ids = list(range(len(rows))) if devices is None else [int(d) for d in devices]
    if len(ids) != len(rows):
        raise ValueError(f"{len(ids)} device ids for {len(rows)} vectors")

    received = np.zeros(dim)
    included: list[int] = []
    excluded: list[int] = []
    for device, x in zip(ids, rows):
        h = mac.gains[device]
        if abs(h) < mac.threshold:
            excluded.append(device)
            continue
        if h == 0.0:
            raise PowerLimitError(f"Device {device} has zero gain and cannot be inverted")
        s = 1.0 / h
        power = float(np.mean((s * x) ** 2)) if x.size else 0.0
        if power > mac.p_max:
            raise PowerLimitError(
                f"Device {device} needs mean power {power:.4g} > p_max={mac.p_max:.4g}"
            )
        received += h * s * x
        included.append(device)
    if excluded:
        logger.debug("Truncated inversion excluded devices %s", excluded)
    z = rng.standard_normal(dim)
    if mac.noise_var > 0:
        received = received + math.sqrt(mac.noise_var) * z
    return MacOutput(received, tuple(included), tuple(excluded))
