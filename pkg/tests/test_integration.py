"""Integration tests: module wiring and a short run of every experiment kind."""

from __future__ import annotations

import importlib
import sys
from pathlib import Path
from typing import Any

import pytest

from goalcomm.config import EXPERIMENT_KINDS, ExperimentConfig
from goalcomm.experiments import EXPERIMENTS, catalog, run_experiment
from goalcomm.output import SUMMARY_FILE

from .conftest import read_rows

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class TestModuleImports:
    @pytest.mark.parametrize(
        "module",
        [
            "goalcomm",
            "goalcomm.constants",
            "goalcomm.config",
            "goalcomm.output",
            "goalcomm.sim",
            "goalcomm.processes",
            "goalcomm.metrics",
            "goalcomm.channels",
            "goalcomm.policies",
            "goalcomm.remote",
            "goalcomm.aircomp",
            "goalcomm.feedback",
            "goalcomm.edge",
            "goalcomm.experiments",
            "goalcomm.__main__",
        ],
    )
    def test_import(self, module: str) -> None:
        importlib.import_module(module)

    def test_catalog_covers_every_kind(self) -> None:
        assert set(EXPERIMENTS) == set(EXPERIMENT_KINDS)
        assert [entry["kind"] for entry in catalog()] == list(EXPERIMENT_KINDS)


def run(kind: str, *overrides: str) -> tuple[Path, dict[str, Any]]:
    config = ExperimentConfig.load(overrides=[f"experiment.kind={kind}", *overrides])
    report = run_experiment(config)
    assert report.ok, report.failures
    (run_dir,) = report.run_dirs
    with open(run_dir / SUMMARY_FILE, "rb") as f:
        summary = tomllib.load(f)
    assert summary["run"]["kind"] == kind
    assert summary["run"]["config_hash"] == config.config_hash()
    return run_dir, summary["statistics"]


@pytest.mark.usefixtures("out_dir")
class TestExperimentRuns:
    def test_tracking(self) -> None:
        run_dir, stats = run("tracking", "tracking.sensors=3", "tracking.epochs=50")
        assert stats["epochs"] == 50
        assert 0.0 <= stats["agreement_rate"] <= 1.0
        assert len(read_rows(run_dir / "epochs.csv")) == 50
        assert (run_dir / "metrics.csv").exists()

    def test_remote_mdp(self) -> None:
        run_dir, stats = run(
            "remote-mdp",
            "remote_mdp.episodes=50",
            "remote_mdp.epsilons=[0.0, 0.1]",
            "remote_mdp.learn=true",
            "remote_mdp.learning_rounds=1",
            "remote_mdp.learning_episodes=20",
        )
        assert stats["greedy"]["eps=0"] == pytest.approx(stats["mean_distance"])
        assert stats["random_walk"]["mean_steps"] > stats["mean_distance"]
        assert (run_dir / "learning_eps0.csv").exists()
        assert (run_dir / "learning_eps0.1.csv").exists()
        # random walk, greedy and learned rows per noise level
        assert len(read_rows(run_dir / "guidance.csv")) == 6

    def test_graph_coding(self) -> None:
        run_dir, stats = run("graph-coding", "graph_coding.max_vertices=6")
        assert stats["instances"] > 0
        assert stats["oracle_violations"] == 0
        schemes = {row[2] for row in read_rows(run_dir / "guidance_costs.csv")}
        assert schemes == {"per_step", "goal_only", "horizon_2", "oracle"}

    def test_aircomp(self) -> None:
        run_dir, stats = run("aircomp", "aircomp.batches=5", "aircomp.dim=4", "aircomp.trials=20")
        assert stats["monotone_batches"] == 5
        assert 0 <= stats["noise_monotone_batches"] <= 5
        assert stats["average_max_abs_error"] < 1e-9
        by_p = stats["by_p"]
        assert by_p["p=64"]["output_variance"] > by_p["p=1"]["output_variance"]
        rows = read_rows(run_dir / "pooling.csv")
        assert len(rows) == 5 * 7
        assert len(rows[0]) == 5

    def test_feel(self) -> None:
        run_dir, stats = run(
            "feel",
            "feel.rounds=5",
            "feel.devices=5",
            "feel.dim=10",
            'feel.schemes=["pa", "gdoac"]',
        )
        assert stats["rounds"] == 5
        assert len(stats["final_loss"]) == 3
        assert len(read_rows(run_dir / "curves.csv")) == 3 * 6

    def test_edge_batch(self) -> None:
        run_dir, stats = run(
            "edge-batch", "edge_batch.duration=5000", "edge_batch.batch_sizes=[4, 8]"
        )
        assert stats["best_max_batch"] in (4, 8)
        assert len(read_rows(run_dir / "batch_sweep.csv")) == 4
        assert (run_dir / "tasks.csv").exists()

    def test_replications_get_their_own_seed(self) -> None:
        config = ExperimentConfig.load(
            overrides=[
                "experiment.kind=feedback",
                "experiment.seed=5",
                "experiment.replications=2",
                "experiment.workers=2",
                'feedback.k_range="20,40"',
                "feedback.probes=200",
            ]
        )
        report = run_experiment(config)
        assert report.ok
        assert [d.name for d in report.run_dirs] == ["rep000", "rep001"]
        for seed, run_dir in zip((5, 6), report.run_dirs):
            lines = (run_dir / "feedback.csv").read_text().splitlines()
            assert lines[0].endswith(f"seed={seed}")
