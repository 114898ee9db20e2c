"""Event-driven multi-sensor tracking experiment.

The receiver wakes up every ``epoch`` ticks, records AoI, expected VoI and
the squared tracking error, and then either polls one sensor (pull) or lets
every sensor decide on its own whether to push. Requests, responses and
pushes traverse the configured link through the simulation kernel.

Pull side: at most one request is in flight; a request with no response
after one epoch is abandoned. Push side: two or more pushes in the same
epoch collide and are lost; a pushed update is acknowledged on delivery,
and an unacknowledged sensor retries with probability ``retry_prob`` at
each following epoch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from goalcomm.channels.link import LinkModel, transmit
from goalcomm.metrics.samples import MetricLog
from goalcomm.metrics.timing import average_aoi
from goalcomm.output import Provenance, write_table
from goalcomm.policies.base import (
    PullPolicy,
    PushPolicy,
    SchedulerPolicy,
    agreement,
    decide_push,
)
from goalcomm.processes.base import History, Observation, UpdateRecord
from goalcomm.processes.estimation import ComponentFilter
from goalcomm.processes.sensors import SensorField
from goalcomm.sim.kernel import Event, SimTime, Simulator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Jump:
    """Sudden shift of ``size`` in component ``component`` at tick ``time``."""

    time: SimTime
    component: int
    size: float


@dataclass
class TrackingScenario:
    sensor_field: SensorField
    policy: SchedulerPolicy
    link: LinkModel = field(default_factory=LinkModel)
    epoch: SimTime = 1000
    duration: SimTime = 10_000
    seed: int = 0
    shadow: PullPolicy | None = None
    poll_every: int = 1
    jumps: tuple[Jump, ...] = ()
    recovery_tolerance: float | None = None
    initial_state: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.epoch <= 0:
            raise ValueError(f"epoch must be > 0 ticks, got {self.epoch}")
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0 ticks, got {self.duration}")
        if self.poll_every < 1:
            raise ValueError(f"poll_every must be >= 1, got {self.poll_every}")
        if self.shadow is not None and not isinstance(self.policy, PullPolicy):
            raise ValueError("A shadow policy can only accompany a pull policy")
        dim = self.sensor_field.dimension
        if self.initial_state is not None and len(self.initial_state) != dim:
            raise ValueError("initial_state length must equal the field dimension")
        for jump in self.jumps:
            if not 0 <= jump.component < dim:
                raise ValueError(f"Jump on unknown component {jump.component}")


@dataclass(frozen=True)
class EpochRecord:
    t: SimTime
    chosen: int  # -1 when no sensor was polled
    aois: tuple[float, ...]
    vois: tuple[float, ...]
    squared_error: float
    shadow: int | None = None


@dataclass
class TrackingRunResult:
    scenario: TrackingScenario
    epochs: list[EpochRecord] = field(default_factory=list)
    decisions: list[int] = field(default_factory=list)
    shadow_decisions: list[int] = field(default_factory=list)
    histories: tuple[History, ...] = ()
    metrics: MetricLog = field(default_factory=MetricLog)
    time_average_aoi: tuple[float, ...] = ()
    channel_uses: int = 0
    requests: int = 0
    collisions: int = 0
    recovery_times: list[float] = field(default_factory=list)

    @property
    def mean_squared_error(self) -> float:
        if not self.epochs:
            return math.nan
        return float(np.mean([e.squared_error for e in self.epochs]))

    @property
    def mean_aoi(self) -> float:
        """Mean AoI sampled at decision epochs, over all sensors."""
        if not self.epochs:
            return math.nan
        return float(np.mean([e.aois for e in self.epochs]))

    @property
    def agreement_rate(self) -> float:
        return agreement(self.decisions, self.shadow_decisions)

    def header(self) -> list[str]:
        n = len(self.scenario.sensor_field)
        return (
            ["t_seconds", "chosen"]
            + [f"aoi_{i}" for i in range(n)]
            + [f"voi_{i}" for i in range(n)]
            + ["squared_error"]
        )

    def rows(self) -> list[list[Any]]:
        timebase = self.scenario.sensor_field.timebase
        return [
            [timebase.seconds(e.t), e.chosen, *e.aois, *e.vois, e.squared_error]
            for e in self.epochs
        ]

    def write_csv(self, path: Path, provenance: Provenance | None = None) -> Path:
        return write_table(path, self.header(), self.rows(), provenance)

    def summary(self) -> dict[str, Any]:
        stats: dict[str, Any] = {
            "policy": self.scenario.policy.name,
            "epochs": len(self.epochs),
            "pull_decisions": len(self.decisions),
            "mean_squared_error": self.mean_squared_error,
            "mean_aoi": self.mean_aoi,
            "time_average_aoi": list(self.time_average_aoi),
            "channel_uses": self.channel_uses,
            "requests": self.requests,
            "collisions": self.collisions,
        }
        if self.scenario.shadow is not None:
            stats["shadow_policy"] = self.scenario.shadow.name
            stats["agreement_rate"] = self.agreement_rate
        if self.recovery_times:
            stats["recovery_times"] = self.recovery_times
        return stats


class _TrackingRun:
    def __init__(self, scenario: TrackingScenario) -> None:
        self.scenario = scenario
        self.field = scenario.sensor_field
        self.timebase = scenario.sensor_field.timebase
        self.sim = Simulator(scenario.seed, self.timebase)
        self.result = TrackingRunResult(scenario, metrics=MetricLog(self.timebase))

        n_sensors = len(self.field)
        dim = self.field.dimension
        self.filters = [ComponentFilter(m, self.timebase) for m in self.field.models]
        self.records: list[list[UpdateRecord]] = [[] for _ in range(n_sensors)]
        self.freshest: list[SimTime] = [0] * n_sensors

        self.truth_rngs = [self.sim.substream(f"truth/{c}") for c in range(dim)]
        self.obs_rng = self.sim.substream("observe")
        self.uplink_rng = self.sim.substream("link/up")
        self.downlink_rng = self.sim.substream("link/down")
        self.policy_rng = self.sim.substream("policy")
        self.shadow_rng = self.sim.substream("shadow")
        self.retry_rng = self.sim.substream("retry")

        if scenario.initial_state is not None:
            start = [float(v) for v in scenario.initial_state]
        else:
            start = [
                model.prior().sample(rng, 1)[0].item()
                for model, rng in zip(self.field.models, self.truth_rngs)
            ]
        self.truth: list[Any] = start
        self.truth_time: SimTime = 0

        self.epoch_index = 0
        self.pending: tuple[int, SimTime] | None = None
        self.last_sent: list[Any | None] = [None] * n_sensors
        self.last_send_time: list[SimTime | None] = [None] * n_sensors
        self.outstanding: list[SimTime | None] = [None] * n_sensors
        self.backlogged = [False] * n_sensors
        self.open_jumps: list[Jump] = []

        self.sim.on("jump", self.on_jump)
        self.sim.on("epoch", self.on_epoch)
        self.sim.on("pull.request", self.on_pull_request)
        self.sim.on("pull.response", self.on_update)
        self.sim.on("push.delivery", self.on_update)

    def truth_at(self, t: SimTime) -> list[Any]:
        if t > self.truth_time:
            for c, model in enumerate(self.field.models):
                x = np.asarray([self.truth[c]], dtype=model.value_dtype)
                advanced = model.advance(x, self.truth_time, t, self.truth_rngs[c], self.timebase)
                self.truth[c] = advanced[0].item()
            self.truth_time = t
        return self.truth

    def run(self) -> TrackingRunResult:
        scenario = self.scenario
        for jump in scenario.jumps:
            if jump.time <= scenario.duration:
                self.sim.schedule(jump.time, "jump", jump)
        if scenario.epoch <= scenario.duration:
            self.sim.schedule(scenario.epoch, "epoch")
        self.sim.run_until(scenario.duration)

        result = self.result
        result.histories = tuple(History(tuple(recs)) for recs in self.records)
        if scenario.duration > 0:
            result.time_average_aoi = tuple(
                average_aoi(h, 0, scenario.duration, timebase=self.timebase)
                for h in result.histories
            )
        result.recovery_times.extend(math.inf for _ in self.open_jumps)
        logger.info(
            "Tracking run (%s) finished: %d epochs, MSE %.4g, %d channel uses",
            scenario.policy.name,
            len(result.epochs),
            result.mean_squared_error,
            result.channel_uses,
        )
        return result

    def on_jump(self, sim: Simulator, event: Event) -> None:
        jump: Jump = event.data
        truth = self.truth_at(sim.now)
        truth[jump.component] += jump.size
        self.open_jumps.append(jump)
        logger.debug("Jump of %.3g on component %d at t=%d", jump.size, jump.component, sim.now)

    def on_epoch(self, sim: Simulator, event: Event) -> None:
        now = sim.now
        truth = self.truth_at(now)
        beliefs = [f.belief_at(now) for f in self.filters]
        error = sum(b.loss(x) for b, x in zip(beliefs, truth))
        aois = np.array([self.timebase.seconds(now - g) for g in self.freshest])
        vois = np.array([self.field.expected_voi(n, beliefs) for n in range(len(self.field))])
        for n in range(len(self.field)):
            self.result.metrics.record(now, "aoi", aois[n], n)
            self.result.metrics.record(now, "voi_pull", vois[n], n)

        chosen, shadow = -1, None
        if isinstance(self.scenario.policy, PullPolicy):
            chosen, shadow = self.pull(now, aois, vois)
        elif isinstance(self.scenario.policy, PushPolicy):
            self.push(now, truth)
        self.result.epochs.append(
            EpochRecord(now, chosen, tuple(aois.tolist()), tuple(vois.tolist()), error, shadow)
        )

        self.epoch_index += 1
        next_epoch = now + self.scenario.epoch
        if next_epoch <= self.scenario.duration:
            sim.schedule(next_epoch, "epoch")

    def pull(self, now: SimTime, aois: np.ndarray, vois: np.ndarray) -> tuple[int, int | None]:
        policy = self.scenario.policy
        assert isinstance(policy, PullPolicy)
        if self.pending is not None and now - self.pending[1] >= self.scenario.epoch:
            logger.debug("Pull request to sensor %d timed out", self.pending[0])
            self.pending = None
        if self.pending is not None or self.epoch_index % self.scenario.poll_every:
            return -1, None

        chosen = policy.select(aois, vois, self.policy_rng)
        self.result.decisions.append(chosen)
        shadow = None
        if self.scenario.shadow is not None:
            shadow = self.scenario.shadow.select(aois, vois, self.shadow_rng)
            self.result.shadow_decisions.append(shadow)

        self.pending = (chosen, now)
        self.result.requests += 1
        transmit(self.scenario.link, chosen, now, self.downlink_rng, self.sim, "pull.request")
        return chosen, shadow

    def on_pull_request(self, sim: Simulator, event: Event) -> None:
        sensor: int = event.data
        y = self.field.observe(sensor, self.truth_at(sim.now), self.obs_rng)
        obs = Observation(y, sim.now, sensor, self.field.sensors[sensor].noise_var)
        self.result.channel_uses += 1
        transmit(self.scenario.link, obs, sim.now, self.uplink_rng, sim, "pull.response")

    def push(self, now: SimTime, truth: Sequence[Any]) -> None:
        policy = self.scenario.policy
        assert isinstance(policy, PushPolicy)
        senders: list[tuple[int, Any]] = []
        for n in range(len(self.field)):
            sent_at = self.outstanding[n]
            if sent_at is not None:
                if now - sent_at < self.scenario.epoch:
                    continue
                self.outstanding[n] = None
                self.backlogged[n] = True
            y = self.field.observe(n, truth, self.obs_rng)
            if self.backlogged[n]:
                send = float(self.retry_rng.random()) < policy.retry_prob
            else:
                send = decide_push(policy, y, self.last_sent[n], now, self.last_send_time[n])
            if send:
                senders.append((n, y))

        for n, _ in senders:
            self.result.channel_uses += 1
            self.last_send_time[n] = now
            self.outstanding[n] = now
        if len(senders) > 1:
            self.result.collisions += 1
            logger.debug("Collision of %d pushes at t=%d", len(senders), now)
            return
        for n, y in senders:
            obs = Observation(y, now, n, self.field.sensors[n].noise_var)
            transmit(self.scenario.link, obs, now, self.uplink_rng, self.sim, "push.delivery")

    def on_update(self, sim: Simulator, event: Event) -> None:
        obs: Observation = event.data
        record = obs.received(sim.now)
        n = record.sensor_id
        self.records[n].append(record)
        self.freshest[n] = max(self.freshest[n], record.g)
        for index, component in enumerate(self.field.sensors[n].components):
            self.filters[component].add(record.project(index))
        latency = self.timebase.seconds(record.r - record.g)
        self.result.metrics.record(sim.now, "latency", latency, n)

        if event.tag == "pull.response":
            if self.pending is not None and self.pending[0] == n:
                self.pending = None
        else:
            self.last_sent[n] = obs.y
            self.outstanding[n] = None
            self.backlogged[n] = False
        self.check_recovery(sim.now)

    def check_recovery(self, now: SimTime) -> None:
        if not self.open_jumps:
            return
        truth = self.truth_at(now)
        still_open = []
        for jump in self.open_jumps:
            estimate = self.filters[jump.component].belief_at(now).point
            tolerance = self.scenario.recovery_tolerance
            if tolerance is None:
                tolerance = abs(jump.size) / 2.0
            if abs(estimate - truth[jump.component]) < tolerance:
                self.result.recovery_times.append(self.timebase.seconds(now - jump.time))
            else:
                still_open.append(jump)
        self.open_jumps = still_open


def run_tracking_experiment(scenario: TrackingScenario) -> TrackingRunResult:
    """Run one replication of the tracking experiment."""
    return _TrackingRun(scenario).run()
