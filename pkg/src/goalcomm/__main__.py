"""Entry point: python -m goalcomm"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from goalcomm import __version__
from goalcomm.config import EXPERIMENT_KINDS, ConfigError, ExperimentConfig, default_section
from goalcomm.constants import LOG_FORMAT, OUTPUT_DIR_ENV

logger = logging.getLogger("goalcomm")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED = 2


def setup_logging(verbose: bool = False) -> None:
    """Configure logging with rich handler if available."""
    level = logging.DEBUG if verbose else logging.INFO

    try:
        from rich.logging import RichHandler

        logging.basicConfig(
            level=level,
            format="%(message)s",
            datefmt="[%X]",
            handlers=[RichHandler(rich_tracebacks=True)],
        )
    except ImportError:
        logging.basicConfig(level=level, format=LOG_FORMAT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goalcomm",
        description="Timing, value-of-information and goal-oriented communication experiments",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")
    parser.add_argument("--version", action="version", version=f"goalcomm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    listing = sub.add_parser("list", help="List experiment kinds and their parameters")
    listing.add_argument("--json", action="store_true", help="Machine-readable catalog")

    show = sub.add_parser("show-config", help="Print the default config of an experiment")
    show.add_argument("kind", choices=EXPERIMENT_KINDS)

    run = sub.add_parser(
        "run",
        help="Run an experiment",
        epilog="Any parameter can also be given as a dotted flag, e.g. --feel.rounds 50",
    )
    run.add_argument("kind", choices=EXPERIMENT_KINDS)
    run.add_argument("--config", type=Path, default=None, help="TOML config file")
    run.add_argument("--seed", type=int, default=None, help="Root seed")
    run.add_argument("--replications", type=int, default=None, help="Number of replications")
    run.add_argument("--workers", type=int, default=None, help="Parallel replications")
    run.add_argument(
        "--out", type=str, default=None, help=f"Output directory (default: ${OUTPUT_DIR_ENV})"
    )
    run.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one config value (repeatable)",
    )
    run.add_argument("--k-range", default=None, help="Feedback K range, e.g. 20:500:20")
    run.add_argument("--eps", default=None, help="Feedback design rates, e.g. 1e-2,1e-4")
    return parser


def dotted_flags(extra: list[str]) -> list[str]:
    """``["--feel.rounds", "50", "--aircomp.dim=8"]`` -> ``["feel.rounds=50", "aircomp.dim=8"]``."""
    overrides = []
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--") or "." not in token.partition("=")[0]:
            raise ConfigError(f"unrecognized argument '{token}'")
        name, sep, value = token[2:].partition("=")
        if not sep:
            if i + 1 >= len(extra):
                raise ConfigError(f"missing value for '{token}'", field=name)
            value = extra[i + 1]
            i += 1
        overrides.append(f"{name}={value}")
        i += 1
    return overrides


def run_overrides(args: argparse.Namespace, extra: list[str]) -> list[str]:
    """Turn the ``run`` flags into ``section.key=value`` overrides, flags last."""
    overrides = [f"experiment.kind={json.dumps(args.kind)}"]
    if args.seed is not None:
        overrides.append(f"experiment.seed={args.seed}")
    if args.replications is not None:
        overrides.append(f"experiment.replications={args.replications}")
    if args.workers is not None:
        overrides.append(f"experiment.workers={args.workers}")
    if args.out is not None:
        overrides.append(f"experiment.output_dir={json.dumps(args.out)}")
    if args.k_range is not None:
        overrides.append(f"feedback.k_range={json.dumps(args.k_range)}")
    if args.eps is not None:
        overrides.append(f"feedback.eps=[{args.eps}]")
    return overrides + list(args.set) + dotted_flags(extra)


def cmd_list(as_json: bool) -> None:
    from goalcomm.experiments import catalog

    entries = catalog()
    if as_json:
        print(json.dumps(entries, indent=2, sort_keys=True))
        return

    from rich.console import Console
    from rich.table import Table

    table = Table(title="goalcomm experiments")
    table.add_column("kind", style="bold")
    table.add_column("section")
    table.add_column("description")
    table.add_column("parameters")
    for entry in entries:
        params = ", ".join(f"{k}={v}" for k, v in entry["parameters"].items())
        table.add_row(entry["kind"], f"[{entry['section']}]", entry["description"], params)
    Console().print(table)


def cmd_show_config(kind: str) -> None:
    import tomli_w

    print(tomli_w.dumps(default_section(kind)), end="")


def cmd_run(args: argparse.Namespace, extra: list[str]) -> int:
    from goalcomm.experiments import run_experiment

    config = ExperimentConfig.load(args.config, run_overrides(args, extra))
    report = run_experiment(config)
    for run_dir in report.run_dirs:
        print(run_dir)
    if not report.ok:
        for replication, error in report.failures:
            logger.error("Replication %d failed: %s", replication, error)
        return EXIT_FAILED
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    setup_logging(verbose=args.verbose)

    if extra and args.command != "run":
        parser.error(f"unrecognized arguments: {' '.join(extra)}")

    try:
        if args.command == "list":
            cmd_list(args.json)
            return EXIT_OK
        if args.command == "show-config":
            cmd_show_config(args.kind)
            return EXIT_OK
        return cmd_run(args, extra)
    except ConfigError as e:
        logger.error("Invalid configuration: %s", e)
        return EXIT_CONFIG
    except Exception:
        logger.exception("Run failed")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
