"""Abstract process interface, observation records, and beliefs."""

from __future__ import annotations

import abc
import bisect
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

import numpy as np
from scipy import stats

from goalcomm.sim.kernel import SimTime, TimeBase
from goalcomm.sim.rng import RngStream


class ProcessError(ValueError):
    """Invalid process parameters, sampling grid, or observation record."""


Value = float | tuple[float, ...]


@dataclass(frozen=True)
class UpdateRecord:
    """One observation ``(y, g, r)`` of the tracked signal."""

    y: Value
    g: SimTime  # generation instant
    r: SimTime  # reception instant
    sensor_id: int = 0
    noise_var: float = 0.0

    def __post_init__(self) -> None:
        if self.r < self.g:
            raise ProcessError(f"Reception r={self.r} precedes generation g={self.g}")
        if self.noise_var < 0:
            raise ProcessError(f"Observation noise variance must be >= 0, got {self.noise_var}")

    def project(self, index: int) -> UpdateRecord:
        """Scalar record for the ``index``-th observed component."""
        if not isinstance(self.y, tuple):
            if index != 0:
                raise IndexError(index)
            return self
        return UpdateRecord(
            y=self.y[index], g=self.g, r=self.r, sensor_id=self.sensor_id, noise_var=self.noise_var
        )


@dataclass(frozen=True)
class History:
    """Receiver knowledge h(t): records ordered by reception time."""

    records: tuple[UpdateRecord, ...] = ()

    def __post_init__(self) -> None:
        receptions = [rec.r for rec in self.records]
        if receptions != sorted(receptions):
            raise ProcessError("History records must have non-decreasing reception times")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[UpdateRecord]:
        return iter(self.records)

    @property
    def last(self) -> UpdateRecord | None:
        return self.records[-1] if self.records else None

    def with_record(self, record: UpdateRecord) -> History:
        """New history including ``record``; a record already present leaves it unchanged."""
        if record in self.records:
            return self
        receptions = [rec.r for rec in self.records]
        index = bisect.bisect_right(receptions, record.r)
        return History(self.records[:index] + (record,) + self.records[index:])

    def received_by(self, t: SimTime) -> History:
        return History(tuple(rec for rec in self.records if rec.r <= t))

    def for_sensor(self, sensor_id: int) -> History:
        return History(tuple(rec for rec in self.records if rec.sensor_id == sensor_id))


def check_grid(grid: Sequence[SimTime]) -> np.ndarray:
    ticks = np.asarray(grid, dtype=np.int64)
    if ticks.ndim != 1:
        raise ProcessError("Sampling grid must be one-dimensional")
    if ticks.size and ticks[0] < 0:
        raise ProcessError(f"Sampling grid starts before t=0: {ticks[0]}")
    if np.any(np.diff(ticks) <= 0):
        raise ProcessError("Sampling grid must be strictly increasing")
    return ticks


class Belief(abc.ABC):
    """Receiver posterior over x(t)."""

    @property
    @abc.abstractmethod
    def point(self) -> Any:
        """Point estimate x̂ (conditional mean, or MAP state)."""
        ...

    @property
    @abc.abstractmethod
    def expectation(self) -> Any:
        """Posterior mean (a probability vector for discrete states)."""
        ...

    @property
    @abc.abstractmethod
    def expected_loss(self) -> float:
        """E[e(x, x̂) | h] under the posterior."""
        ...

    @abc.abstractmethod
    def loss(self, x: Any) -> float:
        """e(x, x̂) for a realized value ``x``."""
        ...

    @abc.abstractmethod
    def sample(self, rng: RngStream, n: int, stratified: bool = False) -> np.ndarray:
        """Draw ``n`` values of x(t) from the posterior."""
        ...


@dataclass(frozen=True)
class GaussianBelief(Belief):
    mean: float
    var: float

    @property
    def point(self) -> float:
        return self.mean

    @property
    def expectation(self) -> float:
        return self.mean

    @property
    def expected_loss(self) -> float:
        return self.var

    def loss(self, x: Any) -> float:
        return float((x - self.mean) ** 2)

    def sample(self, rng: RngStream, n: int, stratified: bool = False) -> np.ndarray:
        if stratified:
            u = (rng.permutation(n) + rng.random(n)) / n
            z = stats.norm.ppf(u)
        else:
            z = rng.standard_normal(n)
        return self.mean + np.sqrt(self.var) * z


@dataclass(frozen=True)
class CategoricalBelief(Belief):
    probs: tuple[float, ...]

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def point(self) -> int:
        return int(np.argmax(self.vector))

    @property
    def expectation(self) -> np.ndarray:
        return self.vector

    @property
    def expected_loss(self) -> float:
        return float(1.0 - np.max(self.vector))

    def loss(self, x: Any) -> float:
        return 0.0 if int(x) == self.point else 1.0

    def sample(self, rng: RngStream, n: int, stratified: bool = False) -> np.ndarray:
        cdf = np.cumsum(self.vector)
        cdf[-1] = 1.0
        if stratified:
            u = (rng.permutation(n) + rng.random(n)) / n
        else:
            u = rng.random(n)
        return np.searchsorted(cdf, u, side="right")


class ProcessModel(abc.ABC):
    """A parametric source process with exact Bayesian filtering."""

    value_dtype: type = float

    @abc.abstractmethod
    def prior(self) -> Belief:
        """Belief about x(0) before any observation."""
        ...

    @abc.abstractmethod
    def predict(self, belief: Belief, t_from: SimTime, t_to: SimTime, timebase: TimeBase) -> Belief:
        """Propagate a belief forward in time."""
        ...

    @abc.abstractmethod
    def update(self, belief: Belief, y: Any, noise_var: float) -> Belief:
        """Condition a belief on an observation ``y`` with the given noise level."""
        ...

    @abc.abstractmethod
    def observe(self, x: Any, noise_var: float, rng: RngStream) -> Any:
        """Draw a noisy observation of the true value(s) ``x``."""
        ...

    @abc.abstractmethod
    def advance(
        self, x: np.ndarray, t_from: SimTime, t_to: SimTime, rng: RngStream, timebase: TimeBase
    ) -> np.ndarray:
        """Draw x(t_to) given x(t_from) = ``x`` for a batch of independent paths."""
        ...

    def sample(
        self,
        grid: Sequence[SimTime],
        rng: RngStream,
        timebase: TimeBase,
        x0: Any = None,
        paths: int = 1,
    ) -> np.ndarray:
        """Exact-law sample paths of shape ``(paths, len(grid))``, starting at t=0."""
        ticks = check_grid(grid)
        if x0 is None:
            current = np.asarray(self.prior().sample(rng, paths), dtype=self.value_dtype)
        else:
            current = np.full(paths, x0, dtype=self.value_dtype)
        out = np.empty((paths, ticks.size), dtype=self.value_dtype)
        previous = 0
        for j, t in enumerate(ticks.tolist()):
            current = self.advance(current, previous, t, rng, timebase)
            out[:, j] = current
            previous = t
        return out

    @abc.abstractmethod
    def voi(self, belief: Belief, noise_var: float) -> float:
        """Closed-form expected error reduction of one fresh observation."""
        ...


@dataclass(frozen=True)
class Observation:
    """Sensor reading drawn inside the simulator (not yet delivered)."""

    y: Value
    g: SimTime
    sensor_id: int
    noise_var: float = 0.0

    def received(self, r: SimTime) -> UpdateRecord:
        return UpdateRecord(
            y=self.y, g=self.g, r=r, sensor_id=self.sensor_id, noise_var=self.noise_var
        )
