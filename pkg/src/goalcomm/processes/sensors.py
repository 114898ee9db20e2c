"""Multi-sensor observation of a vector of independent components."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from goalcomm.processes.base import Belief, History, ProcessError, ProcessModel, Value
from goalcomm.processes.estimation import belief as fuse_belief
from goalcomm.sim.kernel import DEFAULT_TIMEBASE, SimTime, TimeBase
from goalcomm.sim.rng import RngStream


@dataclass(frozen=True)
class Sensor:
    """A sensor reading a subset of components with additive noise ``noise_var``."""

    components: tuple[int, ...]
    noise_var: float = 0.0

    def __post_init__(self) -> None:
        if not self.components:
            raise ProcessError("A sensor must observe at least one component")
        if len(set(self.components)) != len(self.components):
            raise ProcessError(f"Duplicate components in {self.components}")
        if self.noise_var < 0:
            raise ProcessError(f"noise_var must be >= 0, got {self.noise_var}")


class SensorField:
    """``d`` independent component processes observed by ``N`` sensors."""

    def __init__(
        self,
        models: Sequence[ProcessModel],
        sensors: Sequence[Sensor],
        timebase: TimeBase = DEFAULT_TIMEBASE,
    ) -> None:
        if not models:
            raise ProcessError("SensorField needs at least one component model")
        if not sensors:
            raise ProcessError("SensorField needs at least one sensor")
        d = len(models)
        covered: set[int] = set()
        for n, sensor in enumerate(sensors):
            for c in sensor.components:
                if not 0 <= c < d:
                    raise ProcessError(f"Sensor {n} observes component {c} outside [0, {d})")
                covered.add(c)
        missing = sorted(set(range(d)) - covered)
        if missing:
            raise ProcessError(f"Components {missing} are not observed by any sensor")
        self.models = tuple(models)
        self.sensors = tuple(sensors)
        self.timebase = timebase

    @classmethod
    def one_per_component(
        cls,
        models: Sequence[ProcessModel],
        noise_vars: Sequence[float] | None = None,
        timebase: TimeBase = DEFAULT_TIMEBASE,
    ) -> SensorField:
        """Sensor ``n`` observes component ``n`` only."""
        noise = list(noise_vars) if noise_vars is not None else [0.0] * len(models)
        sensors = [Sensor((n,), noise[n]) for n in range(len(models))]
        return cls(models, sensors, timebase)

    @property
    def dimension(self) -> int:
        return len(self.models)

    def __len__(self) -> int:
        return len(self.sensors)

    def observers(self, component: int) -> list[int]:
        return [n for n, s in enumerate(self.sensors) if component in s.components]

    def component_history(self, component: int, histories: Sequence[History]) -> History:
        """Scalar records about ``component`` from every sensor that covers it."""
        records = []
        for n in self.observers(component):
            index = self.sensors[n].components.index(component)
            records.extend(rec.project(index) for rec in histories[n])
        records.sort(key=lambda rec: rec.r)
        return History(tuple(records))

    def belief(self, component: int, histories: Sequence[History], t: SimTime) -> Belief:
        history = self.component_history(component, histories)
        return fuse_belief(self.models[component], history, t, self.timebase)

    def observe(self, sensor_id: int, x: Sequence[Any], rng: RngStream) -> Value:
        """Noisy reading of the true component values ``x`` by ``sensor_id``."""
        sensor = self.sensors[sensor_id]
        values = tuple(
            float(self.models[c].observe(x[c], sensor.noise_var, rng)) for c in sensor.components
        )
        return values[0] if len(values) == 1 else values

    def expected_voi(self, sensor_id: int, beliefs: Sequence[Belief]) -> float:
        """Closed-form VoI of a fresh reading from ``sensor_id`` given per-component beliefs."""
        sensor = self.sensors[sensor_id]
        return sum(self.models[c].voi(beliefs[c], sensor.noise_var) for c in sensor.components)
