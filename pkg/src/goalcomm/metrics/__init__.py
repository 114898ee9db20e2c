"""Timing and value metrics: latency, AoI, semantic/pull/pragmatic VoI."""

from goalcomm.metrics.samples import METRIC_KINDS, MetricKind, MetricLog, MetricSample
from goalcomm.metrics.timing import (
    ControlTask,
    VoIEstimate,
    aoi,
    average_aoi,
    bang_bang,
    bang_bang_task,
    certainty_equivalent,
    expected_voi,
    expected_voi_mc,
    latency,
    peak_aoi,
    pragmatic_voi,
    semantic_voi,
    tracking_task,
)

__all__ = [
    "METRIC_KINDS",
    "ControlTask",
    "MetricKind",
    "MetricLog",
    "MetricSample",
    "VoIEstimate",
    "aoi",
    "average_aoi",
    "bang_bang",
    "bang_bang_task",
    "certainty_equivalent",
    "expected_voi",
    "expected_voi_mc",
    "latency",
    "peak_aoi",
    "pragmatic_voi",
    "semantic_voi",
    "tracking_task",
]
