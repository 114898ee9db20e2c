"""Tests for latency, AoI and the VoI metrics."""

from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from goalcomm.metrics import (
    MetricLog,
    MetricSample,
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
from goalcomm.output import Provenance
from goalcomm.processes import History, OrnsteinUhlenbeck, UpdateRecord, Wiener
from goalcomm.sim.kernel import TimeBase
from goalcomm.sim.rng import RngStream

SECONDS = TimeBase(Fraction(1))


def history(*records: tuple[float, int, int]) -> History:
    return History(tuple(UpdateRecord(y=y, g=g, r=r) for y, g, r in records))


class TestLatency:
    def test_definition(self) -> None:
        assert latency(UpdateRecord(y=0.0, g=2, r=5), SECONDS) == 3

    def test_zero_transit(self) -> None:
        assert latency(UpdateRecord(y=0.0, g=4, r=4), SECONDS) == 0

    def test_millisecond_ticks(self) -> None:
        assert latency(UpdateRecord(y=0.0, g=0, r=1500)) == 1.5


class TestAoI:
    def test_age_since_generation(self) -> None:
        assert aoi(history((0.0, 2, 5)), 7, timebase=SECONDS) == 5

    def test_drops_to_latency_at_reception(self) -> None:
        h = history((0.0, 2, 5))
        assert aoi(h, 5, timebase=SECONDS) == latency(h.records[0], SECONDS)

    def test_uses_freshest_received(self) -> None:
        h = history((0.0, 2, 5), (0.0, 6, 9))
        assert aoi(h, 10, timebase=SECONDS) == 4

    def test_before_first_reception_counts_from_prior_timestamp(self) -> None:
        assert aoi(history((0.0, 2, 5)), 4, t0=1, timebase=SECONDS) == 3

    def test_sawtooth_slope_is_one(self) -> None:
        h = history((0.0, 2, 5))
        ages = [aoi(h, t, timebase=SECONDS) for t in range(5, 12)]
        assert np.all(np.diff(ages) == 1)

    def test_time_average_is_exact(self) -> None:
        assert average_aoi(History(), 0, 10, timebase=SECONDS) == 5.0
        assert average_aoi(history((0.0, 4, 6)), 0, 10, timebase=SECONDS) == pytest.approx(3.4)

    def test_peak_aoi(self) -> None:
        h = history((0.0, 2, 5), (0.0, 6, 9))
        assert peak_aoi(h, timebase=SECONDS) == [5, 7]

    def test_empty_window_rejected(self) -> None:
        with pytest.raises(ValueError):
            average_aoi(History(), 5, 5)


class TestSemanticVoI:
    def test_perfect_observation_removes_all_error(self) -> None:
        h = history((0.0, 0, 0))
        y_new = UpdateRecord(y=1.7, g=4000, r=4000)
        assert semantic_voi(Wiener(), h, y_new, 1.7, 4000) == pytest.approx(1.7**2)

    def test_duplicate_update_has_no_value(self) -> None:
        h = history((0.0, 0, 0), (1.0, 10, 12))
        assert semantic_voi(Wiener(), h, h.records[-1], 3.0, 20) == 0.0

    def test_ensemble_mean_matches_age(self, rng: RngStream) -> None:
        h = history((0.0, 0, 0))
        truths = rng.normal(0.0, 2.0, size=20_000)
        values = np.array(
            [semantic_voi(Wiener(), h, UpdateRecord(y=x, g=4000, r=4000), x, 4000) for x in truths]
        )
        stderr = values.std() / math.sqrt(values.size)
        assert abs(values.mean() - 4.0) < 4 * stderr

    def test_in_transit_update_valued_at_evaluation_time(self) -> None:
        h = history((0.0, 0, 0))
        y_new = UpdateRecord(y=1.0, g=1000, r=9000)
        assert semantic_voi(Wiener(), h, y_new, 1.0, 1000) == pytest.approx(1.0)


class TestExpectedVoI:
    def test_wiener_closed_form(self) -> None:
        assert expected_voi(Wiener(sigma2=1.0), history((0.0, 0, 0)), 4000) == pytest.approx(4.0)

    def test_zero_age_is_worthless(self) -> None:
        assert expected_voi(Wiener(), history((0.0, 7, 7)), 7) == 0.0

    def test_uninformative_sample(self) -> None:
        prior_mse = 4.0
        voi = expected_voi(Wiener(), history((0.0, 0, 0)), 4000, noise_var=1e6 * prior_mse)
        assert voi < 0.01 * prior_mse

    def test_nested_monte_carlo_agrees(self, rng: RngStream) -> None:
        for ticks, target in ((1000, 1.0), (2000, 2.0), (4000, 4.0)):
            est = expected_voi_mc(Wiener(), history((0.0, 0, 0)), ticks, rng)
            assert est.contains(target, k=4.0)
            assert est.value == pytest.approx(target, rel=0.05)

    def test_wiener_voi_is_a_function_of_age(self) -> None:
        h = history((1.0, 100, 300), (-2.0, 900, 1500))
        for t in (1500, 2000, 7777):
            assert expected_voi(Wiener(sigma2=2.5), h, t) == pytest.approx(2.5 * aoi(h, t))

    def test_ou_voi_is_not_a_function_of_age(self) -> None:
        model = OrnsteinUhlenbeck(theta=1.0, sigma2=1.0)
        exact = history((0.5, 0, 0))
        noisy = History((UpdateRecord(y=0.5, g=0, r=0, noise_var=1.0),))
        assert aoi(exact, 500) == aoi(noisy, 500)
        gap = abs(expected_voi(model, exact, 500) - expected_voi(model, noisy, 500))
        assert gap > 1e-6


class TestPragmaticVoI:
    def test_action_invariant_controller_gains_nothing(self, rng: RngStream) -> None:
        task = bang_bang_task(Wiener())
        h = history((0.0, 0, 0))
        y_new = UpdateRecord(y=2.0, g=1000, r=1000)
        est = pragmatic_voi(bang_bang(-100.0), task, h, y_new, 1000, horizon=5, rng=rng)
        assert est.value == 0.0

    def test_tracking_task_matches_semantic_value(self, rng: RngStream) -> None:
        model = Wiener()
        h = history((0.0, 0, 0))
        y_new = UpdateRecord(y=1.3, g=2000, r=2000)
        est = pragmatic_voi(
            certainty_equivalent, tracking_task(model), h, y_new, 2000, horizon=1, rng=rng,
            rollouts=8,
        )
        assert est.value == pytest.approx(semantic_voi(model, h, y_new, 1.3, 2000))

    def test_flipping_a_bang_bang_action_has_value(self, rng: RngStream) -> None:
        model = Wiener()
        h = history((0.1, 0, 0))
        y_new = UpdateRecord(y=-1.0, g=10, r=10)
        est = pragmatic_voi(bang_bang(0.0), bang_bang_task(model), h, y_new, 10, horizon=3, rng=rng)
        assert est.value > 3 * est.stderr
        assert est.value > 0

    def test_nonpositive_horizon_rejected(self, rng: RngStream) -> None:
        with pytest.raises(ValueError):
            pragmatic_voi(
                certainty_equivalent,
                tracking_task(Wiener()),
                History(),
                UpdateRecord(y=0.0, g=0, r=0),
                0,
                horizon=0,
                rng=rng,
            )


class TestMetricLog:
    def test_negative_age_rejected(self) -> None:
        with pytest.raises(ValueError):
            MetricSample(t=0, kind="aoi", value=-1.0)

    def test_series_and_csv(self, tmp_path: Path) -> None:
        log = MetricLog()
        log.record(1000, "aoi", 1.0, sensor_id=0)
        log.record(1000, "voi_pull", 0.5, sensor_id=1)
        log.record(2000, "aoi", 2.0, sensor_id=0)
        assert log.series("aoi") == [1.0, 2.0]
        assert log.series("voi_pull", sensor_id=1) == [0.5]

        path = log.write_csv(tmp_path / "metrics.csv", Provenance("tracking", "abc", 3))
        lines = path.read_text().splitlines()
        assert lines[0] == "# goalcomm 0.1.0 kind=tracking config_hash=abc seed=3"
        assert lines[1] == "t_seconds,kind,sensor_id,value"
        assert lines[2] == "1.0,aoi,0,1.0"
