"""Push and pull scheduling policies."""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from goalcomm.metrics.timing import aoi
from goalcomm.processes.base import History
from goalcomm.processes.sensors import SensorField
from goalcomm.sim.kernel import SimTime
from goalcomm.sim.rng import RngStream


class PolicyError(TypeError):
    """A push decision was asked of a pull policy, or vice versa."""


class SchedulerPolicy(abc.ABC):
    """Decides when (push) or whom (pull) to transmit."""

    name: str = "policy"


class PushPolicy(SchedulerPolicy):
    """Sender-side rule evaluated by each sensor at every decision epoch.

    After an unacknowledged push the sensor retransmits with probability
    ``retry_prob`` per epoch.
    """

    retry_prob: float = 0.5

    @abc.abstractmethod
    def should_send(
        self, value: Any, last_sent: Any | None, t: SimTime, last_send_time: SimTime | None
    ) -> bool:
        ...


class PullPolicy(SchedulerPolicy):
    """Receiver-side rule choosing which sensor to poll."""

    @abc.abstractmethod
    def scores(self, aois: np.ndarray, vois: np.ndarray, rng: RngStream | None) -> np.ndarray:
        """Per-sensor priority; the highest score is polled."""
        ...

    def select(self, aois: np.ndarray, vois: np.ndarray, rng: RngStream | None = None) -> int:
        # np.argmax returns the first maximum, i.e. ties go to the lowest index
        return int(np.argmax(self.scores(aois, vois, rng)))


@dataclass(frozen=True)
class PeriodicPush(PushPolicy):
    interval: SimTime
    retry_prob: float = 0.5
    name: str = "periodic_push"

    def __post_init__(self) -> None:
        if self.interval <= 0:
            raise ValueError(f"Push interval must be > 0, got {self.interval}")
        if not 0.0 < self.retry_prob <= 1.0:
            raise ValueError(f"retry_prob must lie in (0, 1], got {self.retry_prob}")

    def should_send(
        self, value: Any, last_sent: Any | None, t: SimTime, last_send_time: SimTime | None
    ) -> bool:
        return last_send_time is None or t - last_send_time >= self.interval


@dataclass(frozen=True)
class ThresholdPush(PushPolicy):
    """Send when the reading has moved ``threshold`` away from the last delivered value."""

    threshold: float
    retry_prob: float = 0.5
    name: str = "threshold_push"

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError(f"Push threshold must be >= 0, got {self.threshold}")
        if not 0.0 < self.retry_prob <= 1.0:
            raise ValueError(f"retry_prob must lie in (0, 1], got {self.retry_prob}")

    def should_send(
        self, value: Any, last_sent: Any | None, t: SimTime, last_send_time: SimTime | None
    ) -> bool:
        if last_sent is None:
            return True
        deviation = np.max(np.abs(np.asarray(value, dtype=float) - np.asarray(last_sent)))
        return bool(deviation >= self.threshold)


@dataclass(frozen=True)
class AoIGreedyPull(PullPolicy):
    """Poll the sensor with the largest weighted age ``w_n * AoI_n``."""

    weights: tuple[float, ...] | None = None
    name: str = "aoi_greedy_pull"

    def __post_init__(self) -> None:
        if self.weights is not None and any(w <= 0 for w in self.weights):
            raise ValueError(f"AoI weights must be > 0, got {self.weights}")

    def scores(self, aois: np.ndarray, vois: np.ndarray, rng: RngStream | None) -> np.ndarray:
        if self.weights is None:
            return aois
        if len(self.weights) != len(aois):
            raise ValueError(f"{len(self.weights)} AoI weights for {len(aois)} sensors")
        return np.asarray(self.weights) * aois


@dataclass(frozen=True)
class VoIGreedyPull(PullPolicy):
    """Poll the sensor whose fresh reading has the largest expected VoI."""

    name: str = "voi_greedy_pull"

    def scores(self, aois: np.ndarray, vois: np.ndarray, rng: RngStream | None) -> np.ndarray:
        return vois


@dataclass(frozen=True)
class RandomPull(PullPolicy):
    name: str = "random_pull"

    def scores(self, aois: np.ndarray, vois: np.ndarray, rng: RngStream | None) -> np.ndarray:
        if rng is None:
            raise ValueError("RandomPull needs a random stream")
        scores = np.zeros(len(aois))
        scores[int(rng.integers(len(aois)))] = 1.0
        return scores


def decide_push(
    policy: SchedulerPolicy,
    value: Any,
    last_sent: Any | None,
    t: SimTime,
    last_send_time: SimTime | None = None,
) -> bool:
    """``True`` to send the local reading now, ``False`` to hold."""
    if not isinstance(policy, PushPolicy):
        raise PolicyError(f"{type(policy).__name__} is not a push policy")
    return policy.should_send(value, last_sent, t, last_send_time)


def pull_scores(
    field: SensorField, histories: Sequence[History], t: SimTime
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sensor AoI (seconds) and expected VoI at ``t``."""
    if len(histories) != len(field):
        raise ValueError(f"{len(histories)} histories for {len(field)} sensors")
    aois = np.array([aoi(h, t, timebase=field.timebase) for h in histories])
    beliefs = [field.belief(c, histories, t) for c in range(field.dimension)]
    vois = np.array([field.expected_voi(n, beliefs) for n in range(len(field))])
    return aois, vois


def decide_pull(
    policy: SchedulerPolicy,
    field: SensorField,
    histories: Sequence[History],
    t: SimTime,
    rng: RngStream | None = None,
) -> int:
    """Index of the sensor to poll at ``t``; ties go to the lowest index."""
    if not isinstance(policy, PullPolicy):
        raise PolicyError(f"{type(policy).__name__} is not a pull policy")
    aois, vois = pull_scores(field, histories, t)
    return policy.select(aois, vois, rng)


def agreement(a: Sequence[int], b: Sequence[int]) -> float:
    """Fraction of positions where two decision logs coincide."""
    if len(a) != len(b):
        raise ValueError("Decision logs differ in length")
    if not a:
        return math.nan
    return sum(x == y for x, y in zip(a, b)) / len(a)
