"""Experiment configuration loading and saving (TOML)."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Iterator, get_args, get_origin, get_type_hints

import tomli_w

from goalcomm.constants import (
    DEFAULT_ALPHABET,
    DEFAULT_MESSAGES,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_SYMBOLS_PER_MESSAGE,
    EPISODE_STEP_CAP,
    FEEDBACK_PROBES,
    GDOAC_BLOCK,
    GDOAC_CODEBOOK_BITS,
    K_MAX,
    ORACLE_MAX_BLOCK,
    ORACLE_MAX_VERTICES,
    OUTPUT_DIR_ENV,
    POPULATION,
)
from goalcomm.feedback.codecs import FeedbackError
from goalcomm.feedback.sweep import parse_k_range
from goalcomm.sim.kernel import TimeBase

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = (
    "tracking",
    "remote-mdp",
    "graph-coding",
    "aircomp",
    "feel",
    "feedback",
    "edge-batch",
)
PULL_POLICIES = ("aoi_greedy", "voi_greedy", "random")
PUSH_POLICIES = ("periodic_push", "threshold_push")

Problems = Iterator[tuple[str, str]]


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted key, ``line`` its line in the file."""

    def __init__(
        self,
        message: str,
        field: str | None = None,
        line: int | None = None,
        source: str | None = None,
    ) -> None:
        self.field = field
        self.line = line
        self.source = source
        where = source or "config"
        if line is not None:
            where = f"{where}:{line}"
        subject = f" {field}:" if field else ""
        super().__init__(f"{where}:{subject} {message}")


@dataclass
class ExperimentSection:
    """Which experiment to run and how often."""

    kind: str = ""
    seed: int = 0
    replications: int = 1
    workers: int = 1
    output_dir: str = ""
    tick_seconds: str = "1/1000"

    def problems(self) -> Problems:
        if not self.kind:
            yield "kind", "missing required field"
        elif self.kind not in EXPERIMENT_KINDS:
            yield "kind", f"unknown experiment kind '{self.kind}'"
        if self.seed < 0:
            yield "seed", "must be >= 0"
        if self.replications < 1:
            yield "replications", "must be >= 1"
        if self.workers < 1:
            yield "workers", "must be >= 1"
        try:
            TimeBase.from_seconds(self.tick_seconds)
        except (ValueError, ZeroDivisionError):
            yield "tick_seconds", f"not a positive number of seconds: '{self.tick_seconds}'"


@dataclass
class TrackingConfig:
    """Multi-sensor tracking with push or pull scheduling."""

    process: str = "wiener"
    sensors: int = 4
    sigma2: float = 1.0
    theta: float = 1.0
    noise_var: float = 0.0
    policy: str = "voi_greedy"
    shadow: str = "aoi_greedy"
    epoch: int = 1000
    epochs: int = 1000
    delay_ticks: int = 0
    delay_rate: float = 0.0
    erasure_prob: float = 0.0
    push_interval: int = 3000
    push_threshold: float = 1.0
    retry_prob: float = 0.5

    def problems(self) -> Problems:
        if self.process not in ("wiener", "ou"):
            yield "process", f"expected 'wiener' or 'ou', got '{self.process}'"
        if self.sensors < 1:
            yield "sensors", "must be >= 1"
        if self.sigma2 <= 0 or self.theta <= 0:
            yield ("sigma2" if self.sigma2 <= 0 else "theta"), "must be > 0"
        if self.noise_var < 0:
            yield "noise_var", "must be >= 0"
        if self.policy not in PULL_POLICIES + PUSH_POLICIES:
            yield "policy", f"unknown policy '{self.policy}'"
        if self.shadow and self.shadow not in PULL_POLICIES:
            yield "shadow", f"unknown pull policy '{self.shadow}'"
        if self.epoch <= 0 or self.epochs < 1:
            yield ("epoch" if self.epoch <= 0 else "epochs"), "must be positive"
        if self.delay_ticks < 0 or self.delay_rate < 0:
            yield ("delay_ticks" if self.delay_ticks < 0 else "delay_rate"), "must be >= 0"
        if not 0.0 <= self.erasure_prob < 1.0:
            yield "erasure_prob", "must lie in [0, 1)"
        if self.push_interval <= 0:
            yield "push_interval", "must be > 0"
        if self.push_threshold < 0:
            yield "push_threshold", "must be >= 0"
        if not 0.0 < self.retry_prob <= 1.0:
            yield "retry_prob", "must lie in (0, 1]"


@dataclass
class RemoteMdpConfig:
    """Grid-world guidance over a noisy discrete channel."""

    width: int = 5
    height: int = 5
    target: list[int] = field(default_factory=lambda: [4, 4])
    obstacles: list[list[int]] = field(default_factory=list)
    messages: int = DEFAULT_MESSAGES
    alphabet: int = DEFAULT_ALPHABET
    symbols_per_message: int = DEFAULT_SYMBOLS_PER_MESSAGE
    epsilons: list[float] = field(default_factory=lambda: [0.0, 0.05, 0.1, 0.2])
    episodes: int = 1000
    step_cap: int = EPISODE_STEP_CAP
    learn: bool = False
    learning_rounds: int = 6
    learning_episodes: int = 300
    alpha: float = 0.2
    gamma: float = 0.95
    exploration: float = 0.2

    def problems(self) -> Problems:
        if self.width < 1 or self.height < 1:
            yield ("width" if self.width < 1 else "height"), "must be >= 1"
        if len(self.target) != 2:
            yield "target", "expected [x, y]"
        if any(len(cell) != 2 for cell in self.obstacles):
            yield "obstacles", "expected a list of [x, y] cells"
        if self.messages < 1:
            yield "messages", "must be >= 1"
        if self.alphabet < 2:
            yield "alphabet", "must be >= 2"
        if self.symbols_per_message < 1:
            yield "symbols_per_message", "must be >= 1"
        elif self.messages > self.alphabet**self.symbols_per_message:
            yield "messages", "more messages than the channel block can carry"
        if not self.epsilons or any(not 0.0 <= e < 1.0 for e in self.epsilons):
            yield "epsilons", "needs values in [0, 1)"
        if self.episodes < 1 or self.step_cap < 1:
            yield ("episodes" if self.episodes < 1 else "step_cap"), "must be >= 1"
        if self.learning_rounds < 1 or self.learning_episodes < 1:
            yield "learning_rounds", "learning rounds and episodes must be >= 1"
        if not 0.0 < self.alpha <= 1.0:
            yield "alpha", "must lie in (0, 1]"
        if not 0.0 <= self.gamma <= 1.0:
            yield "gamma", "must lie in [0, 1]"
        if not 0.0 <= self.exploration <= 1.0:
            yield "exploration", "must lie in [0, 1]"


@dataclass
class GraphCodingConfig:
    """Guidance code costs on the suite of small state graphs."""

    bits_per_step: int = 1
    horizon: int = 2
    idle_cost: float = 1.0
    max_block: int = ORACLE_MAX_BLOCK
    max_vertices: int = ORACLE_MAX_VERTICES
    oracle: bool = True

    def problems(self) -> Problems:
        if self.bits_per_step < 1:
            yield "bits_per_step", "must be >= 1"
        if self.horizon < 1:
            yield "horizon", "must be >= 1"
        if self.idle_cost < 0:
            yield "idle_cost", "must be >= 0"
        if self.max_block < 1:
            yield "max_block", "must be >= 1"
        if not 2 <= self.max_vertices <= ORACLE_MAX_VERTICES:
            yield "max_vertices", f"must lie in [2, {ORACLE_MAX_VERTICES}]"


@dataclass
class AirCompConfig:
    """AirPooling accuracy and noise sweep over p."""

    devices: int = 8
    dim: int = 16
    batches: int = 1000
    p_values: list[float] = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0])
    noise_var: float = 0.01
    power: float = 1.0
    bound: float = 8.0  # features are drawn from [0, 1)
    trials: int = 200

    def problems(self) -> Problems:
        for key in ("devices", "dim", "batches", "trials"):
            if getattr(self, key) < 1:
                yield key, "must be >= 1"
        if not self.p_values or any(not p >= 1.0 for p in self.p_values):
            yield "p_values", "needs values >= 1"
        if self.noise_var < 0:
            yield "noise_var", "must be >= 0"
        if self.power <= 0:
            yield "power", "must be > 0"
        if self.bound < 1.0:
            yield "bound", "must be >= 1 (features are drawn from [0, 1))"


@dataclass
class FeelConfig:
    """Federated edge learning on a synthetic logistic-regression task."""

    dim: int = 20
    devices: int = 20
    samples_per_device: int = 50
    rounds: int = 200
    lr: float = 0.2
    local_steps: int = 1
    schemes: list[str] = field(default_factory=lambda: ["pa", "obda", "analog", "gdoac"])
    noise_var: float = 0.01
    block: int = GDOAC_BLOCK
    bits: int = GDOAC_CODEBOOK_BITS
    detector: str = "genie"
    signatures: str = "gaussian"
    error_feedback: bool = True
    centralized: bool = True

    def problems(self) -> Problems:
        for key in ("dim", "devices", "samples_per_device", "rounds", "local_steps", "block"):
            if getattr(self, key) < 1:
                yield key, "must be >= 1"
        if self.lr <= 0:
            yield "lr", "must be > 0"
        unknown = [s for s in self.schemes if s not in ("pa", "obda", "analog", "gdoac")]
        if not self.schemes or unknown:
            yield "schemes", f"unknown FEEL schemes {unknown}"
        if self.noise_var < 0:
            yield "noise_var", "must be >= 0"
        if self.bits < 1:
            yield "bits", "must be >= 1"
        elif "gdoac" in self.schemes and self.dim % self.block:
            yield "block", f"must divide dim={self.dim}"
        if self.detector not in ("genie", "matched_filter"):
            yield "detector", f"expected 'genie' or 'matched_filter', got '{self.detector}'"
        if self.signatures not in ("gaussian", "orthogonal"):
            yield "signatures", f"expected 'gaussian' or 'orthogonal', got '{self.signatures}'"


@dataclass
class FeedbackConfig:
    """Downlink acknowledgment length and false-alarm sweep."""

    k_range: str = "20:500:20"
    eps: list[float] = field(default_factory=lambda: [1e-2, 1e-4])
    probes: int = FEEDBACK_PROBES
    population: int = POPULATION

    def problems(self) -> Problems:
        try:
            k_values = parse_k_range(self.k_range)
        except FeedbackError as e:
            yield "k_range", str(e)
        else:
            if max(k_values) > min(K_MAX, self.population):
                yield "k_range", "K exceeds the population"
        if not self.eps or any(not 0.0 < e < 1.0 for e in self.eps):
            yield "eps", "needs values in (0, 1)"
        if self.probes < 1:
            yield "probes", "must be >= 1"
        if self.population < 2:
            yield "population", "must be >= 2"


@dataclass
class EdgeBatchConfig:
    """Batched early-exit inference at an edge server."""

    fixed: list[int] = field(default_factory=lambda: [8, 8, 8])
    per_task: list[int] = field(default_factory=lambda: [1, 1, 1])
    arrival_rate: float = 150.0
    deadline: int = 150
    duration: int = 70_000
    batch_sizes: list[int] = field(default_factory=lambda: [1, 2, 4, 8, 16, 32])
    policy: str = "fixed"
    wait: int = 20
    uplink_delay: int = 2
    uplink_erasure: float = 0.0
    early_exit: bool = True
    compare_no_exit: bool = True
    strict: bool = False

    def problems(self) -> Problems:
        if not self.fixed or len(self.fixed) != len(self.per_task):
            yield "per_task", "needs one entry per block, like fixed"
        if any(a < 0 for a in self.fixed):
            yield "fixed", "block costs must be >= 0"
        if any(c <= 0 for c in self.per_task):
            yield "per_task", "per-task costs must be > 0"
        if self.arrival_rate <= 0:
            yield "arrival_rate", "must be > 0"
        if self.deadline <= 0 or self.duration <= 0:
            yield ("deadline" if self.deadline <= 0 else "duration"), "must be > 0"
        if not self.batch_sizes or any(b < 1 for b in self.batch_sizes):
            yield "batch_sizes", "needs values >= 1"
        if self.policy not in ("fixed", "timeout"):
            yield "policy", f"expected 'fixed' or 'timeout', got '{self.policy}'"
        if self.wait < 0 or self.uplink_delay < 0:
            yield ("wait" if self.wait < 0 else "uplink_delay"), "must be >= 0"
        if not 0.0 <= self.uplink_erasure < 1.0:
            yield "uplink_erasure", "must lie in [0, 1)"


# Section name -> experiment kind that reads it.
SECTION_KINDS = {
    "tracking": "tracking",
    "remote_mdp": "remote-mdp",
    "graph_coding": "graph-coding",
    "aircomp": "aircomp",
    "feel": "feel",
    "feedback": "feedback",
    "edge_batch": "edge-batch",
}
KIND_SECTIONS = {kind: section for section, kind in SECTION_KINDS.items()}


@dataclass
class ExperimentConfig:
    """Root configuration: one ``[experiment]`` table plus a section per kind."""

    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    remote_mdp: RemoteMdpConfig = field(default_factory=RemoteMdpConfig)
    graph_coding: GraphCodingConfig = field(default_factory=GraphCodingConfig)
    aircomp: AirCompConfig = field(default_factory=AirCompConfig)
    feel: FeelConfig = field(default_factory=FeelConfig)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    edge_batch: EdgeBatchConfig = field(default_factory=EdgeBatchConfig)

    @classmethod
    def load(cls, path: Path | None = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
        """Load from a TOML file (or defaults), apply ``section.key=value`` overrides, validate."""
        config = cls()
        lines: dict[str, int] = {}
        source = None
        if path is not None:
            source = str(path)
            try:
                text = path.read_text()
            except OSError as e:
                raise ConfigError(f"cannot read config file: {e}", source=source) from e
            data = _parse(text, source)
            lines = _key_lines(text)
            _merge_config(config, data, lines, source)
            logger.info("Loaded config from %s", path)
        _merge_config(config, parse_overrides(overrides), {}, "override")
        config.validate(lines, source)
        return config

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            tomli_w.dump(self.to_dict(), f)
        logger.info("Saved config to %s", path)

    def to_dict(self) -> dict[str, Any]:
        return _config_to_dict(self)

    def validate(self, lines: dict[str, int] | None = None, source: str | None = None) -> None:
        """Raise ``ConfigError`` for the first out-of-range value, naming its key."""
        lines = lines or {}
        for f in fields(self):
            for key, message in getattr(self, f.name).problems():
                name = f"{f.name}.{key}"
                raise ConfigError(message, field=name, line=lines.get(name), source=source)

    @property
    def kind(self) -> str:
        return self.experiment.kind

    def section(self, kind: str | None = None) -> Any:
        """The parameter section read by experiment ``kind`` (default: the configured one)."""
        return getattr(self, KIND_SECTIONS[kind or self.kind])

    @property
    def timebase(self) -> TimeBase:
        return TimeBase.from_seconds(self.experiment.tick_seconds)

    @property
    def output_dir(self) -> Path:
        if self.experiment.output_dir:
            return Path(self.experiment.output_dir)
        return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))

    def config_hash(self) -> str:
        """Digest of every setting that can change results.

        The seed is reported next to the hash; output directory and worker
        count do not affect any output file and are left out.
        """
        data = self.to_dict()
        for key in ("seed", "output_dir", "workers"):
            data["experiment"].pop(key, None)
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _parse(text: str, source: str) -> dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+)", str(e))
        line = int(match.group(1)) if match else None
        raise ConfigError(f"TOML syntax error: {e}", line=line, source=source) from e


_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_.-]+)\s*\]")
_KEY = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")


def _key_lines(text: str) -> dict[str, int]:
    """1-based line of every ``section`` header and ``section.key`` assignment."""
    lines: dict[str, int] = {}
    section = ""
    for number, raw in enumerate(text.splitlines(), start=1):
        header = _HEADER.match(raw)
        if header:
            section = header.group(1)
            lines.setdefault(section, number)
            continue
        key = _KEY.match(raw)
        if key:
            name = f"{section}.{key.group(1)}" if section else key.group(1)
            lines.setdefault(name, number)
    return lines


def parse_overrides(overrides: Iterable[str]) -> dict[str, dict[str, Any]]:
    """``["feel.rounds=50", "feedback.eps=[1e-2]"]`` -> nested dict.

    Values are read as TOML scalars or arrays; anything that does not parse
    is taken as a bare string.
    """
    data: dict[str, dict[str, Any]] = {}
    for item in overrides:
        path, sep, raw = item.partition("=")
        section, dot, key = path.strip().partition(".")
        if not sep or not dot or not section or not key:
            raise ConfigError(f"override must look like section.key=value, got '{item}'")
        try:
            value = tomllib.loads(f"value = {raw.strip()}")["value"]
        except tomllib.TOMLDecodeError:
            value = raw.strip()
        data.setdefault(section.replace("-", "_"), {})[key.replace("-", "_")] = value
    return data


def _coerce(value: Any, hint: Any, name: str, line: int | None, source: str | None) -> Any:
    origin = get_origin(hint)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(
                f"expected an array, got {type(value).__name__}", name, line, source
            )
        (item,) = get_args(hint)
        return [_coerce(v, item, name, line, source) for v in value]
    if hint is bool:
        ok = isinstance(value, bool)
    elif hint is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif hint is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, hint)
    if not ok:
        raise ConfigError(
            f"expected {hint.__name__}, got {type(value).__name__} {value!r}", name, line, source
        )
    return value


def _merge_config(
    config: ExperimentConfig,
    data: dict[str, Any],
    lines: dict[str, int],
    source: str | None,
) -> ExperimentConfig:
    """Merge a TOML dict into an ExperimentConfig, preserving defaults for missing keys."""
    for section, values in data.items():
        if not hasattr(config, section) or not isinstance(values, dict):
            raise ConfigError("unknown section", section, lines.get(section), source)
        target = getattr(config, section)
        hints = get_type_hints(type(target))
        for key, val in values.items():
            name = f"{section}.{key}"
            if key not in hints:
                raise ConfigError("unknown key", name, lines.get(name), source)
            setattr(target, key, _coerce(val, hints[key], name, lines.get(name), source))
    return config


def _config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    """Convert ExperimentConfig to a dict suitable for TOML serialization."""
    return _strip_none(asdict(config))


def _strip_none(d: dict[str, Any]) -> dict[str, Any]:
    result: dict[str, Any] = {}
    for k, v in d.items():
        if isinstance(v, dict):
            result[k] = _strip_none(v)
        elif v is not None:
            result[k] = v
    return result


def default_section(kind: str) -> dict[str, Any]:
    """Default parameters of experiment ``kind`` as a ``{section: {...}}`` TOML tree."""
    if kind not in KIND_SECTIONS:
        raise ConfigError(f"unknown experiment kind '{kind}'", "experiment.kind")
    section = KIND_SECTIONS[kind]
    config = ExperimentConfig()
    config.experiment.kind = kind
    data = config.to_dict()
    return {"experiment": data["experiment"], section: data[section]}
