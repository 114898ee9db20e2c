"""Tests for the command-line entry point."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from goalcomm.__main__ import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, dotted_flags, main
from goalcomm.config import EXPERIMENT_KINDS, ConfigError
from goalcomm.output import FAILED_MARKER, SUMMARY_FILE

FEEDBACK_ARGS = ["run", "feedback", "--k-range", "20:60:20", "--feedback.probes", "500"]


class TestDottedFlags:
    def test_both_spellings(self) -> None:
        assert dotted_flags(["--feel.rounds", "50", "--aircomp.dim=8"]) == [
            "feel.rounds=50",
            "aircomp.dim=8",
        ]

    def test_flag_without_section_rejected(self) -> None:
        with pytest.raises(ConfigError):
            dotted_flags(["--rounds", "50"])

    def test_missing_value_rejected(self) -> None:
        with pytest.raises(ConfigError):
            dotted_flags(["--feel.rounds"])


class TestInformationalCommands:
    def test_list_json(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["list", "--json"]) == EXIT_OK
        entries = json.loads(capsys.readouterr().out)
        assert [e["kind"] for e in entries] == list(EXPERIMENT_KINDS)
        assert entries[-1]["parameters"]["batch_sizes"] == [1, 2, 4, 8, 16, 32]

    def test_show_config(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["show-config", "feedback"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "[feedback]" in out
        assert 'kind = "feedback"' in out
        assert "[feel]" not in out


class TestRun:
    def test_feedback_run_writes_tables(self, tmp_path: Path) -> None:
        out = tmp_path / "out"
        assert main([*FEEDBACK_ARGS, "--out", str(out), "--seed", "3"]) == EXIT_OK
        run_dir = out / "feedback" / "rep000"
        lines = (run_dir / "feedback.csv").read_text().splitlines()
        assert lines[0].startswith("# goalcomm 0.1.0 kind=feedback config_hash=")
        assert lines[0].endswith("seed=3")
        assert lines[1] == "K,scheme,B_bits,fa_rate"
        assert (run_dir / SUMMARY_FILE).exists()
        assert not (run_dir / FAILED_MARKER).exists()

    def test_rerun_is_byte_identical(self, tmp_path: Path) -> None:
        for name in ("a", "b"):
            assert main([*FEEDBACK_ARGS, "--out", str(tmp_path / name)]) == EXIT_OK
        for file in ("feedback.csv", SUMMARY_FILE):
            a = (tmp_path / "a" / "feedback" / "rep000" / file).read_bytes()
            b = (tmp_path / "b" / "feedback" / "rep000" / file).read_bytes()
            assert a == b

    def test_output_dir_from_environment(self, out_dir: Path) -> None:
        assert main(FEEDBACK_ARGS) == EXIT_OK
        assert (out_dir / "feedback" / "rep000" / "feedback.csv").exists()

    def test_config_file_and_set(self, tmp_path: Path) -> None:
        config = tmp_path / "feedback.toml"
        config.write_text('[feedback]\nk_range = "10,20"\nprobes = 100\n')
        out = tmp_path / "out"
        args = ["run", "feedback", "--config", str(config), "--out", str(out)]
        assert main([*args, "--set", "feedback.eps=[1e-3]"]) == EXIT_OK
        rows = (out / "feedback" / "rep000" / "feedback.csv").read_text().splitlines()[2:]
        assert {row.split(",")[0] for row in rows} == {"10", "20"}

    def test_unknown_key_is_a_config_error(self, tmp_path: Path) -> None:
        out = tmp_path / "out"
        assert main(["run", "feedback", "--feedback.nope", "3", "--out", str(out)]) == EXIT_CONFIG
        assert not out.exists()

    def test_invalid_value_is_a_config_error(self, tmp_path: Path) -> None:
        args = ["run", "feedback", "--k-range", "0:10:2", "--out", str(tmp_path)]
        assert main(args) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path: Path) -> None:
        args = ["run", "feel", "--config", str(tmp_path / "missing.toml")]
        assert main(args) == EXIT_CONFIG

    def test_unknown_kind_is_a_usage_error(self) -> None:
        with pytest.raises(SystemExit) as info:
            main(["run", "teleport"])
        assert info.value.code == 2

    def test_unstable_strict_run_fails(self, tmp_path: Path) -> None:
        out = tmp_path / "out"
        args = [
            "run",
            "edge-batch",
            "--out",
            str(out),
            "--edge_batch.strict=true",
            "--edge_batch.arrival_rate=10000",
            "--edge_batch.duration=2000",
            "--edge_batch.batch_sizes=[1]",
            "--edge_batch.compare_no_exit=false",
        ]
        assert main(args) == EXIT_FAILED
        run_dir = out / "edge-batch" / "rep000"
        assert (run_dir / FAILED_MARKER).read_text().startswith("UnstableSystemError")
        assert not (run_dir / SUMMARY_FILE).exists()
