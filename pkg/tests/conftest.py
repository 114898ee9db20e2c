"""Shared test fixtures."""

from __future__ import annotations

from pathlib import Path

import pytest

from goalcomm.config import ExperimentConfig
from goalcomm.sim.kernel import Simulator
from goalcomm.sim.rng import RngStream


@pytest.fixture
def rng() -> RngStream:
    """Fresh, pinned random stream for each test."""
    return RngStream(1234, "test")


@pytest.fixture
def sim() -> Simulator:
    return Simulator(seed=7)


@pytest.fixture
def config() -> ExperimentConfig:
    """Default config for testing."""
    return ExperimentConfig()


@pytest.fixture
def out_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Output directory picked up through the environment, like a user would set it."""
    path = tmp_path / "results"
    monkeypatch.setenv("GOALCOMM_OUTPUT_DIR", str(path))
    return path


def read_rows(path: Path) -> list[list[str]]:
    """CSV rows after the provenance comment and the header."""
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# goalcomm ")
    return [line.split(",") for line in lines[2:]]
