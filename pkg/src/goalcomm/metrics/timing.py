"""Latency, Age of Information and Value of Information.

VoI comes in three flavours:

* ``semantic_voi``: error reduction against the true value (simulation side only).
* ``expected_voi``: the receiver's own expectation of that reduction.
* ``pragmatic_voi``: reduction in control cost of a downstream controller.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from goalcomm.constants import PRAGMATIC_ROLLOUTS, VOI_INNER_SAMPLES, VOI_OUTER_SAMPLES
from goalcomm.processes.base import (
    GaussianBelief,
    History,
    ProcessError,
    ProcessModel,
    UpdateRecord,
)
from goalcomm.processes.estimation import belief
from goalcomm.processes.gaussian import GaussMarkovProcess
from goalcomm.sim.kernel import DEFAULT_TIMEBASE, SimTime, TimeBase
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)


def latency(record: UpdateRecord, timebase: TimeBase = DEFAULT_TIMEBASE) -> float:
    """Transit time ``r - g`` in seconds."""
    return timebase.seconds(record.r - record.g)


def _freshest_generation(history: History, t: SimTime, t0: SimTime) -> SimTime:
    received = [rec.g for rec in history if rec.r <= t]
    return max(received) if received else t0


def aoi(
    history: History, t: SimTime, t0: SimTime = 0, timebase: TimeBase = DEFAULT_TIMEBASE
) -> float:
    """Age of the freshest update received by ``t``.

    Before the first reception the age counts from the prior timestamp ``t0``.
    """
    return timebase.seconds(t - _freshest_generation(history, t, t0))


def average_aoi(
    history: History,
    t_start: SimTime,
    t_end: SimTime,
    t0: SimTime = 0,
    timebase: TimeBase = DEFAULT_TIMEBASE,
) -> float:
    """Exact time average of the AoI sawtooth over ``[t_start, t_end]``."""
    if t_end <= t_start:
        raise ValueError(f"Empty averaging window [{t_start}, {t_end}]")
    breakpoints = sorted({rec.r for rec in history if t_start < rec.r < t_end})
    edges = [t_start, *breakpoints, t_end]
    area = Fraction(0)
    for lo, hi in itertools.pairwise(edges):
        fresh = _freshest_generation(history, lo, t0)
        area += Fraction(hi * hi - lo * lo, 2) - fresh * (hi - lo)
    return float(area / (t_end - t_start) * timebase.tick)


def peak_aoi(
    history: History, t0: SimTime = 0, timebase: TimeBase = DEFAULT_TIMEBASE
) -> list[float]:
    """AoI just before each reception instant."""
    peaks: list[float] = []
    fresh = t0
    for r, group in itertools.groupby(history, key=lambda rec: rec.r):
        peaks.append(timebase.seconds(r - fresh))
        fresh = max(fresh, *(rec.g for rec in group))
    return peaks


def _as_delivered(record: UpdateRecord, t: SimTime) -> UpdateRecord:
    # value is assessed at the evaluation instant even if the record is still in transit
    if record.g > t:
        raise ProcessError(f"Update generated at g={record.g} is later than t={t}")
    return record if record.r <= t else replace(record, r=t)


def semantic_voi(
    model: ProcessModel,
    history: History,
    y_new: UpdateRecord,
    x_true: Any,
    t: SimTime,
    timebase: TimeBase = DEFAULT_TIMEBASE,
) -> float:
    """Error reduction of ``y_new`` measured against the true value ``x_true``.

    Single realizations can be negative when observations are noisy; only
    the ensemble mean is guaranteed to be non-negative.
    """
    if y_new in history.records:
        return 0.0
    pre = belief(model, history, t, timebase)
    post = belief(model, history.with_record(_as_delivered(y_new, t)), t, timebase)
    return pre.loss(x_true) - post.loss(x_true)


def expected_voi(
    model: ProcessModel,
    history: History,
    t: SimTime,
    noise_var: float = 0.0,
    timebase: TimeBase = DEFAULT_TIMEBASE,
) -> float:
    """Receiver-side expected error reduction of a fresh sample taken at ``t``."""
    return model.voi(belief(model, history, t, timebase), noise_var)


@dataclass(frozen=True)
class VoIEstimate:
    """Monte-Carlo estimate with its standard error."""

    value: float
    stderr: float

    def contains(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.stderr + 1e-12


def _estimate(samples: np.ndarray) -> VoIEstimate:
    n = samples.size
    stderr = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return VoIEstimate(float(samples.mean()), stderr)


def expected_voi_mc(
    model: ProcessModel,
    history: History,
    t: SimTime,
    rng: RngStream,
    noise_var: float = 0.0,
    outer: int = VOI_OUTER_SAMPLES,
    inner: int = VOI_INNER_SAMPLES,
    timebase: TimeBase = DEFAULT_TIMEBASE,
) -> VoIEstimate:
    """Nested Monte-Carlo estimate of :func:`expected_voi`.

    The outer loop draws ``(x, y)`` from the joint law given the history;
    the inner loop estimates the conditional expected loss before and after
    conditioning on ``y`` with stratified posterior draws.
    """
    if outer < 2 or inner < 1:
        raise ValueError(f"Need outer >= 2 and inner >= 1, got {outer}, {inner}")
    pre = belief(model, history, t, timebase)
    truths = pre.sample(rng, outer)
    gains = np.empty(outer)
    for i, x in enumerate(truths):
        y = model.observe(x, noise_var, rng)
        post = model.update(pre, y, noise_var)
        pre_loss = np.mean([pre.loss(v) for v in pre.sample(rng, inner, stratified=True)])
        post_loss = np.mean([post.loss(v) for v in post.sample(rng, inner, stratified=True)])
        gains[i] = pre_loss - post_loss
    estimate = _estimate(gains)
    logger.debug("Nested VoI estimate %.6g +- %.2g", estimate.value, estimate.stderr)
    return estimate


Controller = Callable[[np.ndarray], np.ndarray]
CostFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ControlTask:
    """Controlled Gauss-Markov plant ``x' = a x + (1 - a) mu + b u + noise``.

    ``cost(x, u)`` is charged at each of the ``horizon`` control steps, which
    are ``step_ticks`` apart.
    """

    model: GaussMarkovProcess
    cost: CostFn
    control_gain: float = 0.0
    step_ticks: SimTime = 1


def tracking_task(model: GaussMarkovProcess, step_ticks: SimTime = 1) -> ControlTask:
    """Output tracking: the action is the estimate and the cost its squared error."""
    return ControlTask(model=model, cost=lambda x, u: (x - u) ** 2, step_ticks=step_ticks)


def certainty_equivalent(estimate: np.ndarray) -> np.ndarray:
    return estimate


def bang_bang(threshold: float = 0.0) -> Controller:
    """Two-level controller: ``+1`` at or above ``threshold``, ``-1`` below."""

    def control(estimate: np.ndarray) -> np.ndarray:
        return np.where(estimate >= threshold, 1.0, -1.0)

    return control


def bang_bang_task(model: GaussMarkovProcess, step_ticks: SimTime = 1) -> ControlTask:
    """Unit cost whenever the two-level action disagrees with the sign of ``x - mu``."""
    return ControlTask(
        model=model,
        cost=lambda x, u: np.where((x >= model.mu) == (u > 0), 0.0, 1.0),
        step_ticks=step_ticks,
    )


def pragmatic_voi(
    controller: Controller,
    task: ControlTask,
    history: History,
    y_new: UpdateRecord,
    t: SimTime,
    horizon: int,
    rng: RngStream,
    rollouts: int = PRAGMATIC_ROLLOUTS,
    timebase: TimeBase = DEFAULT_TIMEBASE,
) -> VoIEstimate:
    """Control-cost reduction from ``y_new`` over ``horizon`` steps.

    Each rollout pair shares the initial true state, drawn from the posterior
    given the history plus ``y_new``, and the plant noise sequence; the two
    arms differ only in the estimate the controller acts on.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if rollouts < 2:
        raise ValueError(f"rollouts must be >= 2, got {rollouts}")
    model = task.model
    without = belief(model, history, t, timebase)
    if y_new in history.records:
        with_new = without
    else:
        with_new = belief(model, history.with_record(_as_delivered(y_new, t)), t, timebase)
    if not isinstance(without, GaussianBelief) or not isinstance(with_new, GaussianBelief):
        raise TypeError("pragmatic_voi needs a Gauss-Markov plant")

    a, q = model.transition(timebase.seconds(task.step_ticks))
    x = with_new.sample(rng, rollouts)
    noise = math.sqrt(q) * rng.standard_normal((horizon, rollouts))

    def rollout(estimate0: float) -> np.ndarray:
        state = x.copy()
        estimate = np.full(rollouts, estimate0)
        total = np.zeros(rollouts)
        for k in range(horizon):
            u = np.asarray(controller(estimate), dtype=float)
            total += task.cost(state, u)
            drift = (1.0 - a) * model.mu + task.control_gain * u
            state = a * state + drift + noise[k]
            estimate = a * estimate + drift
        return total

    return _estimate(rollout(without.mean) - rollout(with_new.mean))
