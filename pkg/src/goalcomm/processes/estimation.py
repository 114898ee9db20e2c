"""Exact receiver-side estimation x̂(t | h(t)) from an observation history."""

from __future__ import annotations

import logging
from typing import Any, Sequence

import numpy as np

from goalcomm.processes.base import Belief, History, ProcessError, ProcessModel, UpdateRecord
from goalcomm.sim.kernel import DEFAULT_TIMEBASE, SimTime, TimeBase
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)


def _generation_order(records: Sequence[UpdateRecord]) -> list[UpdateRecord]:
    return sorted(records, key=lambda rec: (rec.g, rec.r))


def belief(
    model: ProcessModel,
    history: History,
    t: SimTime,
    timebase: TimeBase = DEFAULT_TIMEBASE,
) -> Belief:
    """Posterior over x(t) given every record of ``history`` received by ``t``.

    Records are fused in generation order, so a late arrival carrying an
    old sample is placed where it belongs in time rather than where it
    arrived.
    """
    current = model.prior()
    clock: SimTime = 0
    for rec in _generation_order(history.received_by(t).records):
        if rec.g > clock:
            current = model.predict(current, clock, rec.g, timebase)
            clock = rec.g
        current = model.update(current, rec.y, rec.noise_var)
    if t < clock:
        raise ProcessError(f"Query time t={t} precedes the last generation instant {clock}")
    return model.predict(current, clock, t, timebase)


def conditional_mean(
    model: ProcessModel, history: History, t: SimTime, timebase: TimeBase = DEFAULT_TIMEBASE
) -> Any:
    """Posterior mean (a state distribution for finite chains)."""
    return belief(model, history, t, timebase).expectation


def conditional_mse(
    model: ProcessModel, history: History, t: SimTime, timebase: TimeBase = DEFAULT_TIMEBASE
) -> float:
    """Expected estimation error of the point estimate (0/1 loss for finite chains)."""
    return belief(model, history, t, timebase).expected_loss


def sample_path(
    model: ProcessModel,
    grid: Sequence[SimTime],
    rng: RngStream,
    timebase: TimeBase = DEFAULT_TIMEBASE,
    x0: Any = None,
    paths: int | None = None,
) -> np.ndarray:
    """Exact-law samples of x on ``grid``.

    Returns one path of shape ``(len(grid),)``, or ``(paths, len(grid))``
    when ``paths`` is given.
    """
    if paths is None:
        return model.sample(grid, rng, timebase, x0=x0, paths=1)[0]
    if paths < 1:
        raise ProcessError(f"paths must be >= 1, got {paths}")
    return model.sample(grid, rng, timebase, x0=x0, paths=paths)


class ComponentFilter:
    """Recursive filter for one scalar component.

    Records are normally fused one at a time as they arrive. A record that
    is older than the filter state (by generation instant) triggers a full
    recomputation, so the result always equals :func:`belief` on the same
    records.
    """

    def __init__(self, model: ProcessModel, timebase: TimeBase = DEFAULT_TIMEBASE) -> None:
        self.model = model
        self.timebase = timebase
        self._records: list[UpdateRecord] = []
        self._state: Belief = model.prior()
        self._clock: SimTime = 0
        self._last_key: tuple[SimTime, SimTime] | None = None
        self.recomputations = 0

    @property
    def records(self) -> tuple[UpdateRecord, ...]:
        return tuple(self._records)

    @property
    def clock(self) -> SimTime:
        """Generation instant the internal state refers to."""
        return self._clock

    def add(self, record: UpdateRecord) -> None:
        self._records.append(record)
        key = (record.g, record.r)
        if self._last_key is not None and key < self._last_key:
            self.recomputations += 1
            logger.debug("Out-of-order record g=%d, refiltering %d records", record.g, len(self))
            self._refilter()
            return
        self._fuse(record)

    def belief_at(self, t: SimTime) -> Belief:
        if t < self._clock:
            raise ProcessError(f"Query time t={t} precedes filter clock {self._clock}")
        return self.model.predict(self._state, self._clock, t, self.timebase)

    def __len__(self) -> int:
        return len(self._records)

    def _fuse(self, record: UpdateRecord) -> None:
        if record.g > self._clock:
            self._state = self.model.predict(self._state, self._clock, record.g, self.timebase)
            self._clock = record.g
        self._state = self.model.update(self._state, record.y, record.noise_var)
        self._last_key = (record.g, record.r)

    def _refilter(self) -> None:
        self._state = self.model.prior()
        self._clock = 0
        self._last_key = None
        for rec in _generation_order(self._records):
            self._fuse(rec)
