"""Tests for configuration loading, validation and hashing."""

from __future__ import annotations

from pathlib import Path

import pytest

from goalcomm.config import (
    EXPERIMENT_KINDS,
    ConfigError,
    ExperimentConfig,
    default_section,
    parse_overrides,
)

FEEL_FILE = '[experiment]\nkind = "feel"\nseed = 3\n\n[feel]\nrounds = {rounds}\n'


def write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "experiment.toml"
    path.write_text(text)
    return path


class TestExperimentConfig:
    def test_defaults(self, config: ExperimentConfig) -> None:
        assert config.kind == ""
        assert config.experiment.replications == 1
        assert config.feedback.eps == [1e-2, 1e-4]
        assert config.edge_batch.batch_sizes == [1, 2, 4, 8, 16, 32]
        assert config.remote_mdp.messages == 4
        assert (config.aircomp.batches, config.aircomp.devices, config.aircomp.dim) == (1000, 8, 16)

    def test_missing_kind_rejected(self) -> None:
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load()
        assert info.value.field == "experiment.kind"

    def test_save_and_load(self, config: ExperimentConfig, tmp_path: Path) -> None:
        config.experiment.kind = "feedback"
        config.experiment.seed = 17
        config.feedback.k_range = "10:50:10"
        config.edge_batch.fixed = [4, 4]
        config.edge_batch.per_task = [1, 2]

        path = tmp_path / "saved" / "config.toml"
        config.save(path)

        loaded = ExperimentConfig.load(path)
        assert loaded.kind == "feedback"
        assert loaded.experiment.seed == 17
        assert loaded.feedback.k_range == "10:50:10"
        assert loaded.edge_batch.per_task == [1, 2]
        assert loaded.to_dict() == config.to_dict()

    def test_partial_file_preserves_defaults(self, tmp_path: Path) -> None:
        loaded = ExperimentConfig.load(write(tmp_path, FEEL_FILE.format(rounds=7)))
        assert loaded.feel.rounds == 7
        assert loaded.feel.devices == 20
        assert loaded.tracking.process == "wiener"

    def test_missing_file_is_a_config_error(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "nonexistent.toml")

    def test_section_follows_kind(self, tmp_path: Path) -> None:
        loaded = ExperimentConfig.load(write(tmp_path, FEEL_FILE.format(rounds=7)))
        assert loaded.section() is loaded.feel
        assert loaded.section("edge-batch") is loaded.edge_batch


class TestValidation:
    def test_out_of_range_value_names_key_and_line(self, tmp_path: Path) -> None:
        path = write(tmp_path, FEEL_FILE.format(rounds=0))
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(path)
        assert info.value.field == "feel.rounds"
        assert info.value.line == 6
        assert str(info.value) == f"{path}:6: feel.rounds: must be >= 1"

    def test_wrong_type_rejected(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(write(tmp_path, FEEL_FILE.format(rounds='"many"')))
        assert info.value.field == "feel.rounds"
        assert info.value.line == 6

    def test_unknown_key_rejected(self, tmp_path: Path) -> None:
        text = '[experiment]\nkind = "feel"\n\n[feel]\nroundz = 3\n'
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(write(tmp_path, text))
        assert info.value.field == "feel.roundz"
        assert info.value.line == 5

    def test_unknown_section_rejected(self, tmp_path: Path) -> None:
        text = '[experiment]\nkind = "feel"\n\n[bogus]\nx = 1\n'
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(write(tmp_path, text))
        assert info.value.field == "bogus"
        assert info.value.line == 4

    def test_toml_syntax_error(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            ExperimentConfig.load(write(tmp_path, "[experiment\nkind = 1\n"))

    def test_unknown_kind_rejected(self) -> None:
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(overrides=["experiment.kind=teleport"])
        assert info.value.field == "experiment.kind"

    def test_cross_field_check(self) -> None:
        overrides = ["experiment.kind=remote-mdp", "remote_mdp.messages=8"]
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(overrides=overrides)
        assert info.value.field == "remote_mdp.messages"

    @pytest.mark.parametrize("tick", ["0", "-1", "abc"])
    def test_bad_tick_rejected(self, tick: str) -> None:
        overrides = ["experiment.kind=feel", f"experiment.tick_seconds={tick}"]
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(overrides=overrides)
        assert info.value.field == "experiment.tick_seconds"

    def test_aircomp_bound_below_feature_range_rejected(self) -> None:
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(overrides=["experiment.kind=aircomp", "aircomp.bound=0.5"])
        assert info.value.field == "aircomp.bound"

    def test_every_kind_validates_with_defaults(self) -> None:
        for kind in EXPERIMENT_KINDS:
            assert ExperimentConfig.load(overrides=[f"experiment.kind={kind}"]).kind == kind


class TestOverrides:
    def test_values_parse_as_toml(self) -> None:
        items = ["feel.rounds=5", "feedback.eps=[1e-3]", "edge-batch.policy=timeout"]
        data = parse_overrides(items)
        assert data == {
            "feel": {"rounds": 5},
            "feedback": {"eps": [1e-3]},
            "edge_batch": {"policy": "timeout"},
        }

    def test_malformed_override_rejected(self) -> None:
        with pytest.raises(ConfigError):
            parse_overrides(["rounds=5"])
        with pytest.raises(ConfigError):
            parse_overrides(["feel.rounds"])

    def test_override_beats_file(self, tmp_path: Path) -> None:
        path = write(tmp_path, FEEL_FILE.format(rounds=7))
        loaded = ExperimentConfig.load(path, ["feel.rounds=9", "experiment.seed=4"])
        assert loaded.feel.rounds == 9
        assert loaded.experiment.seed == 4

    def test_integer_widens_to_float(self) -> None:
        loaded = ExperimentConfig.load(overrides=["experiment.kind=aircomp", "aircomp.noise_var=1"])
        assert loaded.aircomp.noise_var == 1.0
        assert isinstance(loaded.aircomp.noise_var, float)


class TestDerivedSettings:
    def test_hash_ignores_seed_and_output(self) -> None:
        a = ExperimentConfig.load(overrides=["experiment.kind=feel", "experiment.seed=1"])
        b = ExperimentConfig.load(
            overrides=["experiment.kind=feel", "experiment.seed=2", "experiment.output_dir=x"]
        )
        assert a.config_hash() == b.config_hash()
        assert len(a.config_hash()) == 16

    def test_hash_tracks_parameters(self) -> None:
        a = ExperimentConfig.load(overrides=["experiment.kind=feel"])
        b = ExperimentConfig.load(overrides=["experiment.kind=feel", "feel.rounds=201"])
        assert a.config_hash() != b.config_hash()

    def test_timebase(self, config: ExperimentConfig) -> None:
        assert config.timebase.seconds(1500) == 1.5
        config.experiment.tick_seconds = "0.5"
        assert config.timebase.seconds(3) == 1.5

    def test_output_dir_from_environment(self, config: ExperimentConfig, out_dir: Path) -> None:
        assert config.output_dir == out_dir
        config.experiment.output_dir = "elsewhere"
        assert config.output_dir == Path("elsewhere")

    def test_default_section(self) -> None:
        tree = default_section("edge-batch")
        assert set(tree) == {"experiment", "edge_batch"}
        assert tree["experiment"]["kind"] == "edge-batch"
        assert tree["edge_batch"]["duration"] == 70_000

    def test_default_section_unknown_kind(self) -> None:
        with pytest.raises(ConfigError):
            default_section("teleport")
