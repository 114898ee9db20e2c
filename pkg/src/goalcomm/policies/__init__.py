"""Push/pull scheduling policies and the tracking experiment."""

from goalcomm.policies.base import (
    AoIGreedyPull,
    PeriodicPush,
    PolicyError,
    PullPolicy,
    PushPolicy,
    RandomPull,
    SchedulerPolicy,
    ThresholdPush,
    VoIGreedyPull,
    agreement,
    decide_pull,
    decide_push,
    pull_scores,
)
from goalcomm.policies.tracking import (
    EpochRecord,
    Jump,
    TrackingRunResult,
    TrackingScenario,
    run_tracking_experiment,
)

__all__ = [
    "AoIGreedyPull",
    "EpochRecord",
    "Jump",
    "PeriodicPush",
    "PolicyError",
    "PullPolicy",
    "PushPolicy",
    "RandomPull",
    "SchedulerPolicy",
    "ThresholdPush",
    "TrackingRunResult",
    "TrackingScenario",
    "VoIGreedyPull",
    "agreement",
    "decide_pull",
    "decide_push",
    "pull_scores",
    "run_tracking_experiment",
]
