"""Layer-block timing of a batched early-exit model."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

from goalcomm.sim.kernel import SimTime


@dataclass(frozen=True)
class ModelProfile:
    """Block ``b`` takes ``fixed[b] + per_task[b] * m`` ticks for a batch of ``m`` tasks.

    ``fixed`` is the memory-access cost paid once per batch, ``per_task``
    the compute each task adds.
    """

    fixed: tuple[SimTime, ...]
    per_task: tuple[SimTime, ...]

    def __post_init__(self) -> None:
        if not self.fixed or len(self.fixed) != len(self.per_task):
            raise ValueError("fixed and per_task need one entry per block")
        if any(a < 0 for a in self.fixed):
            raise ValueError(f"Fixed block costs must be >= 0, got {self.fixed}")
        if any(c <= 0 for c in self.per_task):
            raise ValueError(f"Per-task block costs must be > 0, got {self.per_task}")

    @classmethod
    def uniform(cls, blocks: int, fixed: SimTime, per_task: SimTime) -> ModelProfile:
        return cls((fixed,) * blocks, (per_task,) * blocks)

    @property
    def blocks(self) -> int:
        return len(self.fixed)

    def block_time(self, block: int, m: int) -> SimTime:
        """Time of 1-based ``block`` for ``m`` tasks."""
        return self.fixed[block - 1] + self.per_task[block - 1] * m

    def solo_time(self, exit_block: int) -> SimTime:
        return sum(self.block_time(b, 1) for b in range(1, exit_block + 1))


@dataclass(frozen=True)
class ExitMap:
    """Monotone step map from an accuracy requirement in ``[0, 1]`` to an exit block.

    ``thresholds`` has one entry per block boundary: a requirement above the
    ``i``-th threshold needs more than ``i + 1`` blocks.
    """

    thresholds: tuple[float, ...]

    def __post_init__(self) -> None:
        if list(self.thresholds) != sorted(self.thresholds):
            raise ValueError(f"Exit thresholds must be sorted, got {self.thresholds}")

    @classmethod
    def even(cls, blocks: int) -> ExitMap:
        return cls(tuple(i / blocks for i in range(1, blocks)))

    @property
    def blocks(self) -> int:
        return len(self.thresholds) + 1

    def exit_block(self, requirement: float) -> int:
        return 1 + bisect_left(self.thresholds, requirement)


@dataclass(frozen=True)
class BatchRecord:
    """Timing of one batch, relative to its start."""

    offsets: tuple[SimTime, ...]
    sizes: tuple[int, ...]  # tasks still running in each block
    makespan: SimTime
    solo_makespan_sum: SimTime


def compute_batch(profile: ModelProfile, exits: Sequence[int]) -> BatchRecord:
    """Run a batch block by block, returning each task when it reaches its exit.

    Tasks leave after their exit block, so the batch shrinks from block to
    block; blocks past the deepest exit are skipped.
    """
    if not exits:
        raise ValueError("A batch needs at least one task")
    if any(not 1 <= e <= profile.blocks for e in exits):
        raise ValueError(f"Exit blocks must lie in [1, {profile.blocks}], got {list(exits)}")
    elapsed = 0
    finished_at: dict[int, SimTime] = {}
    sizes = []
    for block in range(1, max(exits) + 1):
        m = sum(1 for e in exits if e >= block)
        sizes.append(m)
        elapsed += profile.block_time(block, m)
        finished_at[block] = elapsed
    return BatchRecord(
        offsets=tuple(finished_at[e] for e in exits),
        sizes=tuple(sizes),
        makespan=elapsed,
        solo_makespan_sum=sum(profile.solo_time(e) for e in exits),
    )
