"""Heuristic uplink bandwidth split across edge-inference users."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from typing import Sequence

from goalcomm.constants import BANDWIDTH_QUANTA

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgeUser:
    payload_bits: float
    spectral_efficiency: float  # bit/s/Hz
    deadline: float  # seconds

    def __post_init__(self) -> None:
        if self.payload_bits < 0:
            raise ValueError(f"payload_bits must be >= 0, got {self.payload_bits}")
        if self.spectral_efficiency <= 0 or self.deadline <= 0:
            raise ValueError("spectral_efficiency and deadline must be > 0")

    def required_bandwidth(self) -> float:
        """Bandwidth (Hz) that delivers the payload exactly at the deadline."""
        return self.payload_bits / (self.spectral_efficiency * self.deadline)

    def uplink_delay(self, bandwidth: float) -> float:
        if bandwidth <= 0:
            return float("inf") if self.payload_bits > 0 else 0.0
        return self.payload_bits / (self.spectral_efficiency * bandwidth)


def allocate_bandwidth_greedy(
    users: Sequence[EdgeUser], total_bandwidth: float, quanta: int = BANDWIDTH_QUANTA
) -> list[float]:
    """Hand out ``quanta`` equal slices, each to the user furthest short of its need.

    Users whose need is met keep competing on their (negative) deficit, so
    spare bandwidth is spread evenly. Ties go to the lowest index. This is a
    heuristic with no optimality guarantee.
    """
    if total_bandwidth <= 0:
        raise ValueError(f"Total bandwidth must be > 0, got {total_bandwidth}")
    if not users:
        return []
    quantum = total_bandwidth / quanta
    need = [u.required_bandwidth() for u in users]
    given = [0] * len(users)
    heap = [(-need[i], i) for i in range(len(users))]
    heapq.heapify(heap)
    for _ in range(quanta):
        _, i = heapq.heappop(heap)
        given[i] += 1
        heapq.heappush(heap, (-(need[i] - given[i] * quantum), i))
    shares = [g * quantum for g in given]
    late = [i for i, (u, w) in enumerate(zip(users, shares)) if u.uplink_delay(w) > u.deadline]
    if late:
        logger.debug("Bandwidth split leaves users %s past their deadline", late)
    return shares
