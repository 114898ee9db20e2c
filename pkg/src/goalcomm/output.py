"""Result files: CSV tables, the TOML run summary and the failure marker.

Nothing written here carries a timestamp, so a rerun with the same
configuration and seed reproduces every file byte for byte.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import tomli_w

from goalcomm.constants import APP_NAME, VERSION

logger = logging.getLogger(__name__)

FAILED_MARKER = "FAILED"
SUMMARY_FILE = "summary.toml"


@dataclass(frozen=True)
class Provenance:
    """What every output file records about the run that produced it."""

    kind: str
    config_hash: str
    seed: int

    def line(self) -> str:
        return (
            f"{APP_NAME} {VERSION} kind={self.kind} "
            f"config_hash={self.config_hash} seed={self.seed}"
        )


def _cell(value: Any) -> Any:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return value


def write_table(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    provenance: Provenance | None = None,
) -> Path:
    """Write a CSV table preceded by a ``# <provenance>`` comment line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        if provenance is not None:
            f.write(f"# {provenance.line()}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.info("Wrote %s", path)
    return path


def _toml_safe(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _toml_safe(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_toml_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, "item"):
        return value.item()
    return value


def write_summary(run_dir: Path, statistics: Mapping[str, Any], provenance: Provenance) -> Path:
    """Write ``summary.toml`` with the run statistics and its provenance."""
    run_dir.mkdir(parents=True, exist_ok=True)
    document = {
        "run": {
            "program": APP_NAME,
            "version": VERSION,
            "kind": provenance.kind,
            "config_hash": provenance.config_hash,
            "seed": provenance.seed,
        },
        "statistics": _toml_safe(statistics),
    }
    path = run_dir / SUMMARY_FILE
    with open(path, "wb") as f:
        tomli_w.dump(document, f)
    logger.info("Wrote %s", path)
    return path


def write_failure(run_dir: Path, error: BaseException, provenance: Provenance | None) -> Path:
    """Flag ``run_dir`` as holding partial output."""
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / FAILED_MARKER
    lines = [f"{type(error).__name__}: {error}"]
    if provenance is not None:
        lines.append(provenance.line())
    path.write_text("\n".join(lines) + "\n")
    logger.error("Run failed, partial output flagged at %s", path)
    return path
