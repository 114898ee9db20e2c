"""Event-driven simulation of a batching edge-inference server."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from goalcomm.channels.link import LinkModel, transmit
from goalcomm.constants import EDGE_QUEUE_CAP
from goalcomm.edge.profile import BatchRecord, ExitMap, ModelProfile, compute_batch
from goalcomm.output import Provenance, write_table
from goalcomm.sim.kernel import DEFAULT_TIMEBASE, Event, SimTime, Simulator, TimeBase

logger = logging.getLogger(__name__)


class UnstableSystemError(RuntimeError):
    """The queue outgrew its cap: arrivals exceed what the server can batch through."""


@dataclass(frozen=True)
class FixedSize:
    """Serve exactly ``max_batch`` tasks once that many are waiting."""

    max_batch: int

    def __post_init__(self) -> None:
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")

    def ready(self, waiting: int, head_wait: SimTime) -> bool:
        return waiting >= self.max_batch


@dataclass(frozen=True)
class Timeout:
    """Serve up to ``max_batch`` tasks once full or once the oldest has waited ``wait`` ticks."""

    max_batch: int
    wait: SimTime

    def __post_init__(self) -> None:
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.wait < 0:
            raise ValueError(f"wait must be >= 0 ticks, got {self.wait}")

    def ready(self, waiting: int, head_wait: SimTime) -> bool:
        return waiting >= self.max_batch or (waiting > 0 and head_wait >= self.wait)


BatchPolicy = Union[FixedSize, Timeout]


@dataclass(frozen=True)
class EdgeWorkload:
    profile: ModelProfile
    arrival_rate: float  # tasks per second
    uplink: LinkModel = field(default_factory=LinkModel)
    exit_map: ExitMap | None = None
    deadline: SimTime = 150

    def __post_init__(self) -> None:
        if self.arrival_rate <= 0:
            raise ValueError(f"arrival_rate must be > 0, got {self.arrival_rate}")
        if self.exit_map is not None and self.exit_map.blocks != self.profile.blocks:
            raise ValueError("Exit map and profile disagree on the number of blocks")

    @property
    def exits(self) -> ExitMap:
        return self.exit_map or ExitMap.even(self.profile.blocks)


@dataclass
class TaskRecord:
    task_id: int
    arrival: SimTime
    exit_block: int
    at_server: SimTime | None = None
    batch_id: int | None = None
    completion: SimTime | None = None

    @property
    def latency(self) -> SimTime | None:
        return None if self.completion is None else self.completion - self.arrival


@dataclass
class EdgeStats:
    tasks: list[TaskRecord]
    batches: list[tuple[SimTime, BatchRecord]]
    duration: SimTime
    deadline: SimTime
    timebase: TimeBase = DEFAULT_TIMEBASE
    dropped: int = 0
    unstable: bool = False

    @property
    def completed(self) -> list[TaskRecord]:
        return [t for t in self.tasks if t.completion is not None]

    def _latencies(self) -> np.ndarray:
        return np.array([self.timebase.seconds(t.latency or 0) for t in self.completed])

    @property
    def mean_latency(self) -> float:
        lat = self._latencies()
        return float(lat.mean()) if lat.size else float("nan")

    @property
    def p95_latency(self) -> float:
        lat = self._latencies()
        return float(np.percentile(lat, 95)) if lat.size else float("nan")

    @property
    def throughput(self) -> float:
        """Completions per second."""
        return len(self.completed) / self.timebase.seconds(self.duration)

    @property
    def goodput(self) -> float:
        """Completions within the deadline per second."""
        on_time = sum(1 for t in self.completed if (t.latency or 0) <= self.deadline)
        return on_time / self.timebase.seconds(self.duration)

    def summary(self) -> dict[str, float | int | bool]:
        return {
            "tasks": len(self.tasks),
            "completed": len(self.completed),
            "dropped": self.dropped,
            "batches": len(self.batches),
            "mean_latency_s": self.mean_latency,
            "p95_latency_s": self.p95_latency,
            "throughput_per_s": self.throughput,
            "goodput_per_s": self.goodput,
            "unstable": self.unstable,
        }

    def write_csv(self, path: Path, provenance: Provenance | None = None) -> Path:
        header = ["task_id", "arrival_s", "batch_id", "exit_block", "latency_s"]
        rows = [
            (
                t.task_id,
                self.timebase.seconds(t.arrival),
                -1 if t.batch_id is None else t.batch_id,
                t.exit_block,
                float("nan") if t.latency is None else self.timebase.seconds(t.latency),
            )
            for t in self.tasks
        ]
        return write_table(path, header, rows, provenance)


class _EdgeServer:
    """One batch in service at a time, FIFO queue, early feedback per task."""

    def __init__(
        self,
        sim: Simulator,
        workload: EdgeWorkload,
        policy: BatchPolicy,
        early_exit: bool,
        strict: bool,
    ) -> None:
        self.sim = sim
        self.workload = workload
        self.policy = policy
        self.early_exit = early_exit
        self.strict = strict
        self.queue: deque[TaskRecord] = deque()
        self.busy = False
        self.batches: list[tuple[SimTime, BatchRecord]] = []
        self.dropped = 0
        self.unstable = False
        self.uplink_rng = sim.substream("uplink")
        sim.on("task.arrival", self.on_arrival)
        sim.on("task.uplinked", self.on_uplinked)
        sim.on("batch.timeout", self.on_timeout)
        sim.on("task.done", self.on_task_done)
        sim.on("batch.done", self.on_batch_done)

    def on_arrival(self, sim: Simulator, event: Event) -> None:
        task: TaskRecord = event.data
        link = self.workload.uplink
        if transmit(link, task, sim.now, self.uplink_rng, sim, "task.uplinked") is None:
            self.dropped += 1

    def on_uplinked(self, sim: Simulator, event: Event) -> None:
        task: TaskRecord = event.data
        if len(self.queue) >= EDGE_QUEUE_CAP:
            self.dropped += 1
            if not self.unstable:
                self.unstable = True
                logger.warning(
                    "Edge queue exceeded %d tasks at t=%d; system is unstable",
                    EDGE_QUEUE_CAP,
                    sim.now,
                )
                if self.strict:
                    raise UnstableSystemError(
                        f"Queue exceeded {EDGE_QUEUE_CAP} tasks at t={sim.now}"
                    )
            return
        task.at_server = sim.now
        self.queue.append(task)
        if len(self.queue) == 1 and isinstance(self.policy, Timeout):
            sim.schedule(sim.now + self.policy.wait, "batch.timeout")
        self.try_start(sim)

    def on_timeout(self, sim: Simulator, event: Event) -> None:
        self.try_start(sim)

    def try_start(self, sim: Simulator) -> None:
        if self.busy or not self.queue:
            return
        head = self.queue[0]
        assert head.at_server is not None
        if not self.policy.ready(len(self.queue), sim.now - head.at_server):
            return
        size = min(self.policy.max_batch, len(self.queue))
        batch = [self.queue.popleft() for _ in range(size)]
        last = self.workload.profile.blocks
        exits = [t.exit_block if self.early_exit else last for t in batch]
        record = compute_batch(self.workload.profile, exits)
        batch_id = len(self.batches)
        self.batches.append((sim.now, record))
        for task, offset in zip(batch, record.offsets):
            task.batch_id = batch_id
            sim.schedule(sim.now + offset, "task.done", task)
        sim.schedule(sim.now + record.makespan, "batch.done")
        self.busy = True

    def on_task_done(self, sim: Simulator, event: Event) -> None:
        event.data.completion = sim.now

    def on_batch_done(self, sim: Simulator, event: Event) -> None:
        self.busy = False
        if self.queue and isinstance(self.policy, Timeout):
            head = self.queue[0]
            assert head.at_server is not None
            sim.schedule(max(sim.now, head.at_server + self.policy.wait), "batch.timeout")
        self.try_start(sim)


def _poisson_arrivals(rate: float, duration: SimTime, sim: Simulator) -> list[SimTime]:
    rng = sim.substream("arrivals")
    t = 0.0
    horizon = sim.timebase.seconds(duration)
    times = []
    while True:
        t += float(rng.exponential(1.0 / rate))
        if t > horizon:
            return times
        times.append(sim.timebase.ticks(t))


def simulate(
    workload: EdgeWorkload,
    policy: BatchPolicy,
    duration: SimTime,
    seed: int = 0,
    early_exit: bool = True,
    strict: bool = False,
    timebase: TimeBase = DEFAULT_TIMEBASE,
) -> EdgeStats:
    """Poisson arrivals, uplink, batching and early-exit service for ``duration`` ticks.

    Arrival times and accuracy requirements come from their own streams, so
    runs that differ only in the policy or in ``early_exit`` see the same
    tasks. Tasks still in the system at the end are reported without a
    completion time.
    """
    if duration <= 0:
        raise ValueError(f"duration must be > 0 ticks, got {duration}")
    sim = Simulator(seed, timebase)
    server = _EdgeServer(sim, workload, policy, early_exit, strict)
    requirements = sim.substream("requirements")
    tasks = []
    for i, arrival in enumerate(_poisson_arrivals(workload.arrival_rate, duration, sim)):
        exit_block = workload.exits.exit_block(float(requirements.random()))
        task = TaskRecord(task_id=i, arrival=arrival, exit_block=exit_block)
        tasks.append(task)
        sim.schedule(arrival, "task.arrival", task)
    sim.run_until(duration)
    stats = EdgeStats(
        tasks=tasks,
        batches=server.batches,
        duration=duration,
        deadline=workload.deadline,
        timebase=timebase,
        dropped=server.dropped,
        unstable=server.unstable,
    )
    logger.debug(
        "Edge run B=%d: %d tasks, goodput %.1f/s, mean latency %.4f s",
        policy.max_batch,
        len(tasks),
        stats.goodput,
        stats.mean_latency,
    )
    return stats


def sweep_batch_size(
    workload: EdgeWorkload,
    sizes: Sequence[int],
    duration: SimTime,
    seed: int = 0,
    wait: SimTime | None = None,
) -> list[tuple[int, EdgeStats]]:
    """Goodput and latency for each ``max_batch`` on the same arrival trace."""
    results = []
    for size in sizes:
        policy: BatchPolicy = FixedSize(size) if wait is None else Timeout(size, wait)
        results.append((size, simulate(workload, policy, duration, seed)))
    return results
