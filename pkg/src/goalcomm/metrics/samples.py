"""Per-run metric samples and their CSV export."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Literal, get_args

from goalcomm.output import Provenance, write_table
from goalcomm.sim.kernel import DEFAULT_TIMEBASE, SimTime, TimeBase

MetricKind = Literal["latency", "aoi", "voi_semantic", "voi_pull", "voi_pragmatic"]
METRIC_KINDS: tuple[str, ...] = get_args(MetricKind)


@dataclass(frozen=True)
class MetricSample:
    t: SimTime
    kind: MetricKind
    value: float
    sensor_id: int = 0

    def __post_init__(self) -> None:
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"Unknown metric kind '{self.kind}'")
        if self.kind in ("latency", "aoi") and self.value < 0:
            raise ValueError(f"{self.kind} must be >= 0, got {self.value}")


@dataclass
class MetricLog:
    """Append-only series of metric samples for one run."""

    timebase: TimeBase = DEFAULT_TIMEBASE
    samples: list[MetricSample] = field(default_factory=list)

    def record(self, t: SimTime, kind: MetricKind, value: float, sensor_id: int = 0) -> None:
        self.samples.append(MetricSample(t, kind, float(value), sensor_id))

    def extend(self, samples: Iterable[MetricSample]) -> None:
        self.samples.extend(samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[MetricSample]:
        return iter(self.samples)

    def series(self, kind: MetricKind, sensor_id: int | None = None) -> list[float]:
        return [
            s.value
            for s in self.samples
            if s.kind == kind and (sensor_id is None or s.sensor_id == sensor_id)
        ]

    def rows(self) -> list[tuple[float, str, int, float]]:
        return [(self.timebase.seconds(s.t), s.kind, s.sensor_id, s.value) for s in self.samples]

    def write_csv(self, path: Path, provenance: Provenance | None = None) -> Path:
        header = ["t_seconds", "kind", "sensor_id", "value"]
        return write_table(path, header, self.rows(), provenance)
