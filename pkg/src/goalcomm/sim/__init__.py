"""Deterministic event-driven simulation core."""

from goalcomm.sim.kernel import (
    DEFAULT_TIMEBASE,
    Event,
    EventTrace,
    SchedulingError,
    SimTime,
    Simulator,
    TimeBase,
)
from goalcomm.sim.rng import RngStream, derive_seed

__all__ = [
    "DEFAULT_TIMEBASE",
    "Event",
    "EventTrace",
    "RngStream",
    "SchedulingError",
    "SimTime",
    "Simulator",
    "TimeBase",
    "derive_seed",
]
