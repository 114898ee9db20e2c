"""Deterministic discrete-event simulation kernel.

Time is an integer tick count. Events are dequeued in ``(time, seq)`` order,
where ``seq`` is a monotone insertion counter, so simultaneous events fire
in the order they were scheduled.
"""

from __future__ import annotations

import csv
import heapq
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterator

from goalcomm.constants import DEFAULT_TICK
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)

SimTime = int
"""Simulation time in ticks (see :class:`TimeBase` for the tick duration)."""


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


@dataclass(frozen=True)
class TimeBase:
    """Exact conversion between integer ticks and seconds."""

    tick: Fraction = DEFAULT_TICK

    def __post_init__(self) -> None:
        if self.tick <= 0:
            raise ValueError(f"Tick duration must be positive, got {self.tick}")

    @classmethod
    def from_seconds(cls, tick_seconds: float | str | Fraction) -> TimeBase:
        """Build a time base from a decimal tick length, e.g. ``0.001``."""
        if isinstance(tick_seconds, float):
            tick_seconds = repr(tick_seconds)
        return cls(Fraction(tick_seconds))

    def exact_seconds(self, ticks: SimTime) -> Fraction:
        return ticks * self.tick

    def seconds(self, ticks: SimTime) -> float:
        return float(ticks * self.tick)

    def ticks(self, seconds: float | Fraction) -> SimTime:
        """Nearest tick count for a duration in seconds."""
        if isinstance(seconds, float):
            seconds = Fraction(repr(seconds))
        return round(seconds / self.tick)


DEFAULT_TIMEBASE = TimeBase()


@dataclass(frozen=True, order=True)
class Event:
    """A scheduled occurrence; ordered by ``(time, seq)``."""

    time: SimTime
    seq: int
    tag: str = field(compare=False)
    data: Any = field(default=None, compare=False)


Handler = Callable[["Simulator", Event], None]


@dataclass
class EventTrace:
    """Ordered record of processed events."""

    events: list[Event] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def rows(self) -> list[tuple[int, int, str]]:
        return [(e.time, e.seq, e.tag) for e in self.events]

    def write_csv(self, path: Path) -> None:
        """Export as ``time_ticks,seq,payload_tag`` rows."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["time_ticks", "seq", "payload_tag"])
            writer.writerows(self.rows())


class Simulator:
    """Single-threaded event loop with tag-dispatched handlers.

    Handlers are subscribed per tag, e.g.:
        epoch
        delivery
        batch.done
    """

    def __init__(self, seed: int = 0, timebase: TimeBase = DEFAULT_TIMEBASE) -> None:
        self.seed = int(seed)
        self.timebase = timebase
        self._now: SimTime = 0
        self._queue: list[Event] = []
        self._counter = itertools.count()
        self._handlers: dict[str, list[Handler]] = defaultdict(list)

    @property
    def now(self) -> SimTime:
        return self._now

    @property
    def pending(self) -> int:
        return len(self._queue)

    def on(self, tag: str, handler: Handler) -> None:
        """Subscribe a handler to events carrying ``tag``."""
        self._handlers[tag].append(handler)
        logger.debug(
            "Registered handler %s for tag '%s'", getattr(handler, "__name__", repr(handler)), tag
        )

    def schedule(self, time: SimTime, tag: str, data: Any = None) -> Event:
        """Enqueue an event at absolute tick ``time``."""
        if time < self._now:
            raise SchedulingError(f"Cannot schedule '{tag}' at t={time}: clock is at {self._now}")
        event = Event(time=int(time), seq=next(self._counter), tag=tag, data=data)
        heapq.heappush(self._queue, event)
        return event

    def schedule_in(self, delay: SimTime, tag: str, data: Any = None) -> Event:
        return self.schedule(self._now + delay, tag, data)

    def peek(self) -> Event | None:
        return self._queue[0] if self._queue else None

    def run_until(self, t_end: SimTime) -> EventTrace:
        """Process every event with ``time <= t_end`` and advance the clock to ``t_end``."""
        trace = EventTrace()
        while self._queue and self._queue[0].time <= t_end:
            event = heapq.heappop(self._queue)
            self._now = event.time
            trace.events.append(event)
            for handler in self._handlers.get(event.tag, []):
                try:
                    handler(self, event)
                except Exception:
                    logger.exception(
                        "Error in handler %s for event '%s' at t=%d",
                        getattr(handler, "__name__", repr(handler)),
                        event.tag,
                        event.time,
                    )
                    raise
        self._now = max(self._now, t_end)
        return trace

    def substream(self, name: str) -> RngStream:
        """Random stream for ``name``, independent of every other name."""
        return RngStream(self.seed, name)
