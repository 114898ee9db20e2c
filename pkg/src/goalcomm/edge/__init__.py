"""Multi-user edge inference with batching and early exits."""

from goalcomm.edge.allocation import EdgeUser, allocate_bandwidth_greedy
from goalcomm.edge.batching import (
    BatchPolicy,
    EdgeStats,
    EdgeWorkload,
    FixedSize,
    TaskRecord,
    Timeout,
    UnstableSystemError,
    simulate,
    sweep_batch_size,
)
from goalcomm.edge.profile import BatchRecord, ExitMap, ModelProfile, compute_batch

__all__ = [
    "BatchPolicy",
    "BatchRecord",
    "EdgeStats",
    "EdgeUser",
    "EdgeWorkload",
    "ExitMap",
    "FixedSize",
    "ModelProfile",
    "TaskRecord",
    "Timeout",
    "UnstableSystemError",
    "allocate_bandwidth_greedy",
    "compute_batch",
    "simulate",
    "sweep_batch_size",
]
