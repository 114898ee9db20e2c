"""Tests for the event kernel, time base and random streams."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from goalcomm.sim.kernel import Event, SchedulingError, Simulator, TimeBase
from goalcomm.sim.rng import RngStream, derive_seed


class TestSchedule:
    def test_earlier_time_fires_first(self, sim: Simulator) -> None:
        sim.schedule(5, "late")
        sim.schedule(3, "early")
        trace = sim.run_until(10)
        assert [e.tag for e in trace] == ["early", "late"]

    def test_ties_fire_in_insertion_order(self, sim: Simulator) -> None:
        sim.schedule(7, "a")
        sim.schedule(7, "b")
        sim.schedule(7, "c")
        assert [e.tag for e in sim.run_until(7)] == ["a", "b", "c"]

    def test_past_schedule_rejected(self, sim: Simulator) -> None:
        sim.run_until(4)
        with pytest.raises(SchedulingError):
            sim.schedule(2, "past")

    def test_scheduling_at_now_is_allowed(self, sim: Simulator) -> None:
        sim.run_until(4)
        event = sim.schedule(4, "now")
        assert event.time == 4
        assert sim.pending == 1

    def test_schedule_in_is_relative(self, sim: Simulator) -> None:
        sim.run_until(10)
        assert sim.schedule_in(5, "x").time == 15

    def test_peek_shows_next_event(self, sim: Simulator) -> None:
        assert sim.peek() is None
        sim.schedule(9, "b")
        sim.schedule(2, "a")
        peeked = sim.peek()
        assert peeked is not None and peeked.tag == "a"


class TestRunUntil:
    def test_empty_queue_advances_clock(self, sim: Simulator) -> None:
        trace = sim.run_until(10)
        assert len(trace) == 0
        assert sim.now == 10

    def test_trace_order_with_sequence_numbers(self, sim: Simulator) -> None:
        sim.schedule(1, "x")
        sim.schedule(1, "y")
        sim.schedule(3, "z")
        assert sim.run_until(5).rows() == [(1, 0, "x"), (1, 1, "y"), (3, 2, "z")]

    def test_events_after_horizon_stay_queued(self, sim: Simulator) -> None:
        sim.schedule(3, "in")
        sim.schedule(12, "out")
        trace = sim.run_until(10)
        assert [e.tag for e in trace] == ["in"]
        assert sim.pending == 1
        assert sim.now == 10

    def test_handlers_dispatch_by_tag(self, sim: Simulator) -> None:
        seen: list[tuple[int, object]] = []

        def on_ping(s: Simulator, event: Event) -> None:
            seen.append((s.now, event.data))
            if event.data < 3:
                s.schedule_in(2, "ping", event.data + 1)

        sim.on("ping", on_ping)
        sim.schedule(0, "ping", 0)
        sim.schedule(1, "other")
        sim.run_until(100)
        assert seen == [(0, 0), (2, 1), (4, 2), (6, 3)]

    def test_handler_errors_propagate(self, sim: Simulator) -> None:
        def broken(s: Simulator, event: Event) -> None:
            raise RuntimeError("boom")

        sim.on("bad", broken)
        sim.schedule(1, "bad")
        with pytest.raises(RuntimeError, match="boom"):
            sim.run_until(5)

    def test_identical_runs_give_identical_traces(self, tmp_path: Path) -> None:
        paths = []
        for i in range(2):
            s = Simulator(seed=3)
            rng = s.substream("arrivals")
            for t in np.cumsum(rng.integers(0, 5, size=50)):
                s.schedule(int(t), "arrival")
            path = tmp_path / f"trace{i}.csv"
            s.run_until(1000).write_csv(path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert paths[0].read_text().splitlines()[0] == "time_ticks,seq,payload_tag"


class TestTimeBase:
    def test_default_tick_is_one_millisecond(self) -> None:
        assert TimeBase().tick == Fraction(1, 1000)

    def test_conversion_is_exact(self) -> None:
        tb = TimeBase.from_seconds(0.001)
        assert tb.exact_seconds(1500) == Fraction(3, 2)
        assert tb.seconds(1500) == 1.5
        assert tb.ticks(1.5) == 1500

    def test_no_drift_over_many_ticks(self) -> None:
        tb = TimeBase.from_seconds("0.1")
        assert tb.exact_seconds(10**9) == 10**8

    def test_nonpositive_tick_rejected(self) -> None:
        with pytest.raises(ValueError):
            TimeBase(Fraction(0))


class TestRngStream:
    def test_same_name_same_draws(self, sim: Simulator) -> None:
        a = sim.substream("noise").random(100)
        b = sim.substream("noise").random(100)
        assert np.array_equal(a, b)

    def test_names_are_uncorrelated(self, sim: Simulator) -> None:
        a = sim.substream("noise").standard_normal(100_000)
        b = sim.substream("arrivals").standard_normal(100_000)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01

    def test_root_seed_changes_draws(self) -> None:
        a = RngStream(1, "noise").random(10)
        b = RngStream(2, "noise").random(10)
        assert not np.array_equal(a, b)

    def test_spawn_is_reproducible_and_distinct(self, rng: RngStream) -> None:
        child = rng.spawn("episode0")
        assert child.name == "test/episode0"
        assert np.array_equal(child.random(5), rng.spawn("episode0").random(5))
        assert not np.array_equal(rng.spawn("episode1").random(5), rng.spawn("episode0").random(5))

    def test_empty_name_rejected(self) -> None:
        with pytest.raises(ValueError):
            RngStream(0, "")

    def test_derive_seed_is_stable(self) -> None:
        assert derive_seed(5, "rep", 1) == derive_seed(5, "rep", 1)
        assert derive_seed(5, "rep", 1) != derive_seed(5, "rep", 2)
        assert 0 <= derive_seed(5) < 2**64
