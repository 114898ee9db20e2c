"""Point-to-point packet link: random delay plus erasures."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Union

from goalcomm.sim.kernel import DEFAULT_TIMEBASE, Event, SimTime, Simulator, TimeBase
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeterministicDelay:
    ticks: SimTime = 0

    def __post_init__(self) -> None:
        if self.ticks < 0:
            raise ValueError(f"Delay must be >= 0 ticks, got {self.ticks}")

    def sample(self, rng: RngStream, timebase: TimeBase = DEFAULT_TIMEBASE) -> SimTime:
        return self.ticks


@dataclass(frozen=True)
class ShiftedExponential:
    """``d0`` ticks plus an exponential excess with ``rate`` per second."""

    d0: SimTime
    rate: float

    def __post_init__(self) -> None:
        if self.d0 < 0:
            raise ValueError(f"Delay offset must be >= 0 ticks, got {self.d0}")
        if self.rate <= 0:
            raise ValueError(f"Rate must be > 0, got {self.rate}")

    def sample(self, rng: RngStream, timebase: TimeBase = DEFAULT_TIMEBASE) -> SimTime:
        return self.d0 + timebase.ticks(float(rng.exponential(1.0 / self.rate)))


DelayModel = Union[DeterministicDelay, ShiftedExponential]


@dataclass(frozen=True)
class LinkModel:
    delay: DelayModel = DeterministicDelay()
    erasure_prob: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.erasure_prob < 1.0:
            raise ValueError(f"erasure_prob must lie in [0, 1), got {self.erasure_prob}")


@dataclass(frozen=True)
class Delivery:
    time: SimTime
    packet: Any
    event: Event | None = None


def transmit(
    link: LinkModel,
    packet: Any,
    now: SimTime,
    rng: RngStream,
    sim: Simulator | None = None,
    tag: str = "delivery",
) -> Delivery | None:
    """Send ``packet`` at ``now``; returns ``None`` when the link erases it.

    With a simulator the delivery is also scheduled as an event carrying
    the packet. Exactly one erasure draw and one delay draw are consumed per
    call, erased or not, so paired runs stay aligned.
    """
    timebase = sim.timebase if sim is not None else DEFAULT_TIMEBASE
    erased = float(rng.random()) < link.erasure_prob
    delay = link.delay.sample(rng, timebase)
    if erased:
        logger.debug("Packet erased at t=%d", now)
        return None
    event = sim.schedule(now + delay, tag, packet) if sim is not None else None
    return Delivery(now + delay, packet, event)
