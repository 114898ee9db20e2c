"""Experiment catalog and runners.

Every runner takes the resolved configuration, one replication seed and a
run directory, writes its CSV tables there and returns the statistics that
go into ``summary.toml``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from goalcomm.aircomp import (
    FeatureBatch,
    FeelScheme,
    LogisticTask,
    PoolingConfig,
    air_pool,
    aircomp_error,
    centralized_gd,
    max_approx_error,
    pooled_variance,
    train_feel,
)
from goalcomm.channels.discrete import DiscreteChannel
from goalcomm.channels.link import DelayModel, DeterministicDelay, LinkModel, ShiftedExponential
from goalcomm.config import KIND_SECTIONS, ExperimentConfig
from goalcomm.edge import EdgeStats, EdgeWorkload, FixedSize, ModelProfile, Timeout, simulate
from goalcomm.edge.batching import BatchPolicy
from goalcomm.feedback import parse_k_range, sweep, write_sweep_csv
from goalcomm.output import Provenance, write_failure, write_summary, write_table
from goalcomm.policies.base import (
    AoIGreedyPull,
    PeriodicPush,
    PullPolicy,
    RandomPull,
    SchedulerPolicy,
    ThresholdPush,
    VoIGreedyPull,
)
from goalcomm.policies.tracking import TrackingScenario, run_tracking_experiment
from goalcomm.processes import OrnsteinUhlenbeck, ProcessModel, SensorField, Wiener
from goalcomm.remote import (
    ACTIONS,
    GridWorld,
    QLearningParams,
    evaluate_guidance,
    graph_suite,
    greedy_policy,
    guidance_code_cost,
    guidance_oracle,
    q_learn_joint,
    random_walk_stats,
)
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)

Runner = Callable[[ExperimentConfig, int, Path, Provenance], dict[str, Any]]


@dataclass(frozen=True)
class ExperimentKind:
    name: str
    section: str
    description: str
    outputs: tuple[str, ...]
    runner: Runner

    def parameters(self) -> dict[str, Any]:
        return asdict(getattr(ExperimentConfig(), self.section))


@dataclass
class RunReport:
    """Where each replication wrote its files, and which ones failed."""

    kind: str
    config_hash: str
    run_dirs: list[Path] = field(default_factory=list)
    failures: list[tuple[int, BaseException]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


# --- Tracking ------------------------------------------------------------- #


_PULL_POLICIES: dict[str, type[PullPolicy]] = {
    "aoi_greedy": AoIGreedyPull,
    "voi_greedy": VoIGreedyPull,
    "random": RandomPull,
}


def run_tracking(
    config: ExperimentConfig, seed: int, run_dir: Path, provenance: Provenance
) -> dict[str, Any]:
    cfg = config.tracking
    models: list[ProcessModel]
    if cfg.process == "wiener":
        models = [Wiener(cfg.sigma2) for _ in range(cfg.sensors)]
    else:
        models = [OrnsteinUhlenbeck(cfg.theta, sigma2=cfg.sigma2) for _ in range(cfg.sensors)]
    sensor_field = SensorField.one_per_component(
        models, [cfg.noise_var] * cfg.sensors, config.timebase
    )
    policy: SchedulerPolicy
    if cfg.policy in _PULL_POLICIES:
        policy = _PULL_POLICIES[cfg.policy]()
    elif cfg.policy == "periodic_push":
        policy = PeriodicPush(cfg.push_interval, cfg.retry_prob)
    else:
        policy = ThresholdPush(cfg.push_threshold, cfg.retry_prob)
    shadow = None
    if cfg.shadow and isinstance(policy, PullPolicy):
        shadow = _PULL_POLICIES[cfg.shadow]()
    delay: DelayModel = DeterministicDelay(cfg.delay_ticks)
    if cfg.delay_rate > 0:
        delay = ShiftedExponential(cfg.delay_ticks, cfg.delay_rate)
    scenario = TrackingScenario(
        sensor_field=sensor_field,
        policy=policy,
        link=LinkModel(delay, cfg.erasure_prob),
        epoch=cfg.epoch,
        duration=cfg.epoch * cfg.epochs,
        seed=seed,
        shadow=shadow,
    )
    result = run_tracking_experiment(scenario)
    result.write_csv(run_dir / "epochs.csv", provenance)
    result.metrics.write_csv(run_dir / "metrics.csv", provenance)
    return result.summary()


# --- Remote MDP ----------------------------------------------------------- #


def run_remote_mdp(
    config: ExperimentConfig, seed: int, run_dir: Path, provenance: Provenance
) -> dict[str, Any]:
    cfg = config.remote_mdp
    env = GridWorld(
        cfg.width,
        cfg.height,
        target=(cfg.target[0], cfg.target[1]),
        obstacles=frozenset((c[0], c[1]) for c in cfg.obstacles),
    )
    # One evaluation stream for every channel, so rows differ only by the noise level.
    evaluation = RngStream(seed, "remote_mdp/evaluation")
    baseline = random_walk_stats(env, cfg.episodes, evaluation, cfg.step_cap)
    greedy = greedy_policy(env, cfg.messages) if cfg.messages >= len(ACTIONS) else None
    if greedy is None and not cfg.learn:
        logger.warning("Fewer than %d messages and learning is off: only the random walk runs",
                       len(ACTIONS))

    rows: list[tuple[float, str, float, float, float]] = []
    stats: dict[str, Any] = {
        "random_walk": {"mean_steps": baseline.mean_steps, "mean_return": baseline.mean_return}
    }
    for eps in cfg.epsilons:
        channel = DiscreteChannel(cfg.alphabet, eps, cfg.symbols_per_message)
        rows.append((eps, "random_walk", baseline.mean_steps, baseline.mean_return,
                     baseline.success_rate))
        label = f"eps={eps:g}"
        if greedy is not None:
            result = evaluate_guidance(env, greedy, channel, cfg.episodes, evaluation, cfg.step_cap)
            rows.append((eps, "greedy", result.mean_steps, result.mean_return,
                         result.success_rate))
            stats.setdefault("greedy", {})[label] = result.mean_steps
            if eps == 0.0:
                stats["mean_distance"] = float(np.mean([env.distance(s) for s in result.starts]))
        if cfg.learn:
            params = QLearningParams(
                rounds=cfg.learning_rounds,
                episodes=cfg.learning_episodes,
                alpha=cfg.alpha,
                gamma=cfg.gamma,
                epsilon=cfg.exploration,
                step_cap=cfg.step_cap,
                messages=cfg.messages,
            )
            learned = q_learn_joint(env, channel, params, RngStream(seed, f"remote_mdp/{label}"))
            learned.write_curve(run_dir / f"learning_eps{eps:g}.csv", provenance)
            result = evaluate_guidance(
                env, learned.policy, channel, cfg.episodes, evaluation, cfg.step_cap
            )
            rows.append((eps, "learned", result.mean_steps, result.mean_return,
                         result.success_rate))
            stats.setdefault("learned", {})[label] = result.mean_steps
    header = ["epsilon", "policy", "mean_steps", "mean_return", "success_rate"]
    write_table(run_dir / "guidance.csv", header, rows, provenance)
    return stats


# --- Graph coding --------------------------------------------------------- #


def run_graph_coding(
    config: ExperimentConfig, seed: int, run_dir: Path, provenance: Provenance
) -> dict[str, Any]:
    cfg = config.graph_coding
    rows: list[tuple[Any, ...]] = []
    totals: dict[str, list[float]] = {}
    oracle_violations = 0
    plans_differ = 0
    for graph in graph_suite(seed, cfg.max_vertices):
        uniform = all(graph.cost(u, v) == 1.0 for u, v in graph.graph.edges)
        for start in range(len(graph)):
            if start == graph.goal:
                continue
            costs = {}
            for scheme in ("per_step", "goal_only", "horizon_k"):
                c = guidance_code_cost(
                    graph, start, scheme, cfg.bits_per_step, cfg.horizon, cfg.idle_cost
                )
                costs[scheme] = c.cost
                totals.setdefault(c.scheme, []).append(c.cost)
                rows.append((graph.name, start, c.scheme, c.cost, c.transition_cost,
                             c.idle_steps, c.total_bits, c.bits_before_first_action))
            if cfg.oracle:
                best = guidance_oracle(
                    graph, start, cfg.bits_per_step, cfg.idle_cost, cfg.max_block
                )
                totals.setdefault("oracle", []).append(best)
                rows.append((graph.name, start, "oracle", best, math.nan, -1, -1, -1))
                if best > min(costs["per_step"], costs["goal_only"]) + 1e-9:
                    oracle_violations += 1
            if uniform and graph.cost_optimal_paths(start) != graph.time_optimal_paths(start):
                plans_differ += 1
    header = ["graph", "start", "scheme", "cost", "transition_cost", "idle_steps",
              "total_bits", "bits_before_first_action"]
    write_table(run_dir / "guidance_costs.csv", header, rows, provenance)
    if oracle_violations:
        logger.warning("Oracle cost exceeded a fixed scheme on %d instances", oracle_violations)
    return {
        "instances": len(totals.get("per_step", [])),
        "mean_cost": {name: float(np.mean(v)) for name, v in totals.items()},
        "oracle_violations": oracle_violations,
        "uniform_plan_mismatches": plans_differ,
    }


# --- Aircomp -------------------------------------------------------------- #


def run_aircomp(
    config: ExperimentConfig, seed: int, run_dir: Path, provenance: Provenance
) -> dict[str, Any]:
    cfg = config.aircomp
    root = RngStream(seed, "aircomp")
    average = PoolingConfig(1.0, "average", bound=cfg.bound)
    rows: list[tuple[int, float, float, float, float]] = []
    monotone = 0
    noise_monotone = 0
    average_gap = 0.0
    for b in range(cfg.batches):
        batch = FeatureBatch(root.spawn(f"batch{b}").uniform(0.0, 1.0, (cfg.devices, cfg.dim)))
        pooled = air_pool(batch, average, root.spawn(f"average{b}"))
        average_gap = max(average_gap, float(np.max(np.abs(pooled - batch.features.mean(0)))))
        errors: list[float] = []
        variances: list[float] = []
        for p in cfg.p_values:
            pooling = PoolingConfig(p, "max_approx", cfg.noise_var, cfg.power, cfg.bound)
            # Same stream name for every p: the noise draws are paired.
            approx = max_approx_error(batch, p)
            mse = aircomp_error(batch, pooling, root.spawn(f"noise{b}"), cfg.trials)
            variance = pooled_variance(batch, pooling, root.spawn(f"noise{b}"), cfg.trials)
            errors.append(approx)
            variances.append(variance)
            rows.append((b, p, approx, mse, variance))
        if all(x >= y - 1e-12 for x, y in zip(errors, errors[1:])):
            monotone += 1
        if all(y >= x for x, y in zip(variances, variances[1:])):
            noise_monotone += 1
    write_table(
        run_dir / "pooling.csv",
        ["batch", "p", "max_approx_error", "aircomp_error", "output_variance"],
        rows,
        provenance,
    )
    by_p = {
        f"p={p:g}": {
            "max_approx_error": float(np.mean([r[2] for r in rows if r[1] == p])),
            "aircomp_error": float(np.mean([r[3] for r in rows if r[1] == p])),
            "output_variance": float(np.mean([r[4] for r in rows if r[1] == p])),
        }
        for p in cfg.p_values
    }
    if noise_monotone < cfg.batches:
        logger.info("Output variance rose with p on %d of %d batches", noise_monotone, cfg.batches)
    return {
        "batches": cfg.batches,
        "monotone_batches": monotone,
        "noise_monotone_batches": noise_monotone,
        "average_max_abs_error": average_gap,
        "by_p": by_p,
    }


# --- FEEL ----------------------------------------------------------------- #


def run_feel(
    config: ExperimentConfig, seed: int, run_dir: Path, provenance: Provenance
) -> dict[str, Any]:
    cfg = config.feel
    task = LogisticTask(
        RngStream(seed, "feel/task"), cfg.dim, cfg.devices, cfg.samples_per_device
    )
    curves = []
    if cfg.centralized:
        curves.append(centralized_gd(task, cfg.rounds, cfg.lr))
    for name in cfg.schemes:
        scheme = FeelScheme(
            name=name,  # type: ignore[arg-type]
            noise_var=cfg.noise_var,
            block=cfg.block,
            bits=cfg.bits,
            detector=cfg.detector,  # type: ignore[arg-type]
            signatures=cfg.signatures,  # type: ignore[arg-type]
            error_feedback=cfg.error_feedback,
        )
        curves.append(
            train_feel(
                task,
                scheme,
                cfg.rounds,
                RngStream(seed, f"feel/{name}"),
                cfg.lr,
                cfg.local_steps,
            )
        )
    rows = [row for curve in curves for row in curve.rows()]
    write_table(run_dir / "curves.csv", ["round", "scheme", "loss", "accuracy"], rows, provenance)
    return {
        "rounds": cfg.rounds,
        "final_loss": {c.scheme: c.final_loss for c in curves},
        "final_accuracy": {c.scheme: c.accuracies[-1] for c in curves},
    }


# --- Feedback ------------------------------------------------------------- #


def run_feedback(
    config: ExperimentConfig, seed: int, run_dir: Path, provenance: Provenance
) -> dict[str, Any]:
    cfg = config.feedback
    k_values = parse_k_range(cfg.k_range)
    rows = sweep(k_values, cfg.eps, seed, cfg.population, cfg.probes)
    write_sweep_csv(rows, run_dir / "feedback.csv", provenance)
    k_top = max(k_values)
    return {
        "k_values": len(k_values),
        "bits_at_max_k": {r.scheme: r.bits for r in rows if r.k == k_top},
        "max_fa_rate": {
            r.scheme: max(x.fa_rate for x in rows if x.scheme == r.scheme)
            for r in rows
            if r.k == k_top
        },
    }


# --- Edge batch ----------------------------------------------------------- #


def run_edge_batch(
    config: ExperimentConfig, seed: int, run_dir: Path, provenance: Provenance
) -> dict[str, Any]:
    cfg = config.edge_batch
    workload = EdgeWorkload(
        profile=ModelProfile(tuple(cfg.fixed), tuple(cfg.per_task)),
        arrival_rate=cfg.arrival_rate,
        uplink=LinkModel(DeterministicDelay(cfg.uplink_delay), cfg.uplink_erasure),
        deadline=cfg.deadline,
    )
    modes = [cfg.early_exit] + ([not cfg.early_exit] if cfg.compare_no_exit else [])
    rows: list[tuple[Any, ...]] = []
    runs: dict[tuple[int, bool], EdgeStats] = {}
    for size in cfg.batch_sizes:
        policy: BatchPolicy = FixedSize(size) if cfg.policy == "fixed" else Timeout(size, cfg.wait)
        for early_exit in modes:
            stats = simulate(
                workload,
                policy,
                cfg.duration,
                seed,
                early_exit=early_exit,
                strict=cfg.strict,
                timebase=config.timebase,
            )
            runs[size, early_exit] = stats
            s = stats.summary()
            rows.append((size, cfg.policy, int(early_exit), s["tasks"], s["completed"],
                         s["dropped"], s["mean_latency_s"], s["p95_latency_s"],
                         s["throughput_per_s"], s["goodput_per_s"], int(stats.unstable)))
    header = ["max_batch", "policy", "early_exit", "tasks", "completed", "dropped",
              "mean_latency_s", "p95_latency_s", "throughput_per_s", "goodput_per_s",
              "unstable"]
    write_table(run_dir / "batch_sweep.csv", header, rows, provenance)

    best = max(cfg.batch_sizes, key=lambda b: runs[b, cfg.early_exit].goodput)
    runs[best, cfg.early_exit].write_csv(run_dir / "tasks.csv", provenance)
    unstable = sorted({b for (b, _), st in runs.items() if st.unstable})
    if unstable:
        logger.warning("Edge queue unstable for max_batch in %s", unstable)
    return {
        "best_max_batch": best,
        "best_goodput_per_s": runs[best, cfg.early_exit].goodput,
        "unstable_batch_sizes": unstable,
    }


EXPERIMENTS: dict[str, ExperimentKind] = {
    kind.name: kind
    for kind in (
        ExperimentKind(
            "tracking",
            KIND_SECTIONS["tracking"],
            "Push/pull scheduling of noisy sensors tracking Gauss-Markov components",
            ("epochs.csv", "metrics.csv"),
            run_tracking,
        ),
        ExperimentKind(
            "remote-mdp",
            KIND_SECTIONS["remote-mdp"],
            "Grid-world agent guided over a noisy discrete channel",
            ("guidance.csv", "learning_eps<eps>.csv"),
            run_remote_mdp,
        ),
        ExperimentKind(
            "graph-coding",
            KIND_SECTIONS["graph-coding"],
            "Guidance code costs and the exact oracle on small state graphs",
            ("guidance_costs.csv",),
            run_graph_coding,
        ),
        ExperimentKind(
            "aircomp",
            KIND_SECTIONS["aircomp"],
            "AirPooling max-approximation and noise amplification across p",
            ("pooling.csv",),
            run_aircomp,
        ),
        ExperimentKind(
            "feel",
            KIND_SECTIONS["feel"],
            "Federated edge learning with PA, OBDA, analog and GD-OAC aggregation",
            ("curves.csv",),
            run_feel,
        ),
        ExperimentKind(
            "feedback",
            KIND_SECTIONS["feedback"],
            "Acknowledgment feedback length and false-alarm rate versus K",
            ("feedback.csv",),
            run_feedback,
        ),
        ExperimentKind(
            "edge-batch",
            KIND_SECTIONS["edge-batch"],
            "Batched early-exit edge inference: goodput and latency versus batch size",
            ("batch_sweep.csv", "tasks.csv"),
            run_edge_batch,
        ),
    )
}


def catalog() -> list[dict[str, Any]]:
    """Every experiment kind with its config section and default parameters."""
    return [
        {
            "kind": kind.name,
            "section": kind.section,
            "description": kind.description,
            "outputs": list(kind.outputs),
            "parameters": kind.parameters(),
        }
        for kind in EXPERIMENTS.values()
    ]


def replication_dir(config: ExperimentConfig, replication: int) -> Path:
    return config.output_dir / config.kind / f"rep{replication:03d}"


def _run_replication(config: ExperimentConfig, replication: int, config_hash: str) -> Path:
    kind = EXPERIMENTS[config.kind]
    seed = config.experiment.seed + replication
    run_dir = replication_dir(config, replication)
    provenance = Provenance(kind.name, config_hash, seed)
    run_dir.mkdir(parents=True, exist_ok=True)
    logger.debug("Replication %d of %s with seed %d", replication, kind.name, seed)
    try:
        statistics = kind.runner(config, seed, run_dir, provenance)
        write_summary(run_dir, statistics, provenance)
    except Exception as e:
        write_failure(run_dir, e, provenance)
        raise
    return run_dir


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run every replication of the configured experiment.

    Replication ``r`` uses seed ``seed + r`` and its own directory; with
    ``workers > 1`` replications run on a thread pool.
    """
    config_hash = config.config_hash()
    report = RunReport(config.kind, config_hash)
    n = config.experiment.replications
    logger.info(
        "Running %s: %d replication(s), config hash %s, seed %d",
        config.kind,
        n,
        config_hash,
        config.experiment.seed,
    )
    with ThreadPoolExecutor(max_workers=min(config.experiment.workers, n)) as pool:
        futures = [pool.submit(_run_replication, config, r, config_hash) for r in range(n)]
        for r, future in enumerate(futures):
            try:
                report.run_dirs.append(future.result())
            except Exception as e:
                logger.error("Replication %d of %s failed: %s", r, config.kind, e)
                report.run_dirs.append(replication_dir(config, r))
                report.failures.append((r, e))
    logger.info("Finished %s: %d ok, %d failed", config.kind, n - len(report.failures),
                len(report.failures))
    return report
