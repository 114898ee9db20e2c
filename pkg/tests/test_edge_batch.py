"""Tests for batched early-exit edge inference."""

from __future__ import annotations

from pathlib import Path

import pytest

from goalcomm.channels import DeterministicDelay, LinkModel
from goalcomm.edge import (
    EdgeUser,
    EdgeWorkload,
    ExitMap,
    FixedSize,
    ModelProfile,
    Timeout,
    UnstableSystemError,
    allocate_bandwidth_greedy,
    compute_batch,
    simulate,
    sweep_batch_size,
)

PROFILE = ModelProfile.uniform(3, fixed=4, per_task=1)


@pytest.fixture
def workload() -> EdgeWorkload:
    return EdgeWorkload(
        profile=ModelProfile((8, 8, 8), (1, 1, 1)),
        arrival_rate=150.0,
        uplink=LinkModel(DeterministicDelay(2)),
        deadline=150,
    )


class TestComputeBatch:
    def test_shrinking_batch_example(self) -> None:
        record = compute_batch(PROFILE, [1, 1, 3, 3])
        assert record.offsets == (8, 8, 20, 20)
        assert record.sizes == (4, 2, 2)
        assert record.makespan == 20

    def test_all_exit_early(self) -> None:
        record = compute_batch(PROFILE, [1, 1, 1])
        assert record.offsets == (7, 7, 7)
        assert record.sizes == (3,)

    def test_single_task_runs_solo(self) -> None:
        assert compute_batch(PROFILE, [3]).offsets == (15,)
        assert PROFILE.solo_time(3) == 15

    def test_amortization(self) -> None:
        record = compute_batch(PROFILE, [1, 1, 3, 3])
        assert record.makespan < record.solo_makespan_sum == 40

    def test_invalid_exit_rejected(self) -> None:
        with pytest.raises(ValueError):
            compute_batch(PROFILE, [0])
        with pytest.raises(ValueError):
            compute_batch(PROFILE, [])

    def test_profile_needs_positive_per_task_cost(self) -> None:
        with pytest.raises(ValueError):
            ModelProfile((1,), (0,))


class TestExitMap:
    def test_even_map(self) -> None:
        exits = ExitMap.even(3)
        assert [exits.exit_block(r) for r in (0.0, 0.2, 0.5, 0.9, 1.0)] == [1, 1, 2, 3, 3]

    def test_unsorted_thresholds_rejected(self) -> None:
        with pytest.raises(ValueError):
            ExitMap((0.6, 0.3))


class TestSimulate:
    def test_empty_system_latency_is_uplink_plus_solo_compute(self) -> None:
        workload = EdgeWorkload(PROFILE, arrival_rate=0.05, uplink=LinkModel(DeterministicDelay(2)))
        stats = simulate(workload, FixedSize(1), duration=2_000_000, seed=3)
        done = stats.completed
        assert done
        expected = [2 + PROFILE.solo_time(t.exit_block) for t in done]
        assert all(t.latency is not None and t.latency >= e for t, e in zip(done, expected))
        exact = sum(t.latency == e for t, e in zip(done, expected))
        assert exact >= 0.95 * len(done)

    def test_early_exit_never_delays_a_task(self, workload: EdgeWorkload) -> None:
        early = simulate(workload, FixedSize(8), duration=20_000, seed=5, early_exit=True)
        full = simulate(workload, FixedSize(8), duration=20_000, seed=5, early_exit=False)
        assert [t.arrival for t in early.tasks] == [t.arrival for t in full.tasks]
        for a, b in zip(early.tasks, full.tasks):
            if b.completion is not None:
                assert a.completion is not None
                assert a.completion <= b.completion

    def test_batch_sizes_shrink_over_blocks(self, workload: EdgeWorkload) -> None:
        stats = simulate(workload, FixedSize(8), duration=10_000, seed=1)
        assert stats.batches
        for _, record in stats.batches:
            assert list(record.sizes) == sorted(record.sizes, reverse=True)
            assert record.makespan < record.solo_makespan_sum

    def test_timeout_with_zero_wait_serves_immediately(self, workload: EdgeWorkload) -> None:
        stats = simulate(workload, Timeout(4, wait=0), duration=10_000, seed=2)
        starts = [start for start, _ in stats.batches]
        ends = {start + record.makespan for start, record in stats.batches}
        uplinked = {t.at_server for t in stats.tasks if t.at_server is not None}
        assert all(s in uplinked or s in ends for s in starts)

    def test_goodput_has_interior_maximum(self, workload: EdgeWorkload) -> None:
        sizes = [1, 2, 4, 8, 16, 32]
        results = sweep_batch_size(workload, sizes, duration=70_000, seed=0)
        goodputs = [stats.goodput for _, stats in results]
        best = goodputs.index(max(goodputs))
        assert 0 < best < len(sizes) - 1

    def test_overload_is_flagged(self) -> None:
        workload = EdgeWorkload(PROFILE, arrival_rate=10_000.0)
        stats = simulate(workload, FixedSize(1), duration=2000, seed=0)
        assert stats.unstable
        assert stats.dropped > 0

    def test_strict_mode_raises_on_overload(self) -> None:
        workload = EdgeWorkload(PROFILE, arrival_rate=10_000.0)
        with pytest.raises(UnstableSystemError):
            simulate(workload, FixedSize(1), duration=2000, seed=0, strict=True)

    def test_task_csv(self, workload: EdgeWorkload, tmp_path: Path) -> None:
        stats = simulate(workload, FixedSize(4), duration=1000, seed=0)
        lines = stats.write_csv(tmp_path / "tasks.csv").read_text().splitlines()
        assert lines[0] == "task_id,arrival_s,batch_id,exit_block,latency_s"
        assert len(lines) == len(stats.tasks) + 1


class TestBandwidthAllocation:
    def test_single_user_gets_everything(self) -> None:
        shares = allocate_bandwidth_greedy([EdgeUser(1e6, 2.0, 0.1)], 1e6)
        assert shares == [pytest.approx(1e6)]

    def test_identical_users_split_evenly(self) -> None:
        user = EdgeUser(1e6, 2.0, 0.1)
        shares = allocate_bandwidth_greedy([user, user], 1e6)
        assert shares[0] == pytest.approx(shares[1])

    def test_tight_deadline_gets_more(self) -> None:
        tight = EdgeUser(1e6, 2.0, 0.01)
        slack = EdgeUser(1e6, 2.0, 1.0)
        shares = allocate_bandwidth_greedy([slack, tight], 1e7)
        assert shares[1] >= shares[0]
        assert sum(shares) == pytest.approx(1e7)

    def test_nonpositive_bandwidth_rejected(self) -> None:
        with pytest.raises(ValueError):
            allocate_bandwidth_greedy([EdgeUser(1.0, 1.0, 1.0)], 0.0)
