from __future__ import annotations

import argparse
import asyncio
import logging
import sys
import tomllib
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from app.config import Settings, get_settings
from app.db import close_db, create_engine, create_session_factory, init_db
from app.errors import IntegratorFailure
from app.logging import configure_logging
from app.schemas import ExperimentKind, RunConfig, RunReport
from app.workers.experiment_worker import ExperimentWorker

logger = logging.getLogger(__name__)

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plap",
        description="Solve the weighted parabolic p-Laplacian and check its long-time behaviour.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for kind in ExperimentKind:
        sub = commands.add_parser(kind.value, help=f"run the {kind.value} experiment")
        sub.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        sub.add_argument("--out", type=Path, default=None, help="output directory")
        sub.add_argument("--seed", type=int, default=None, help="override the config seed")
        sub.add_argument(
            "--strict-paper",
            action="store_true",
            help="reject configurations with dim < 2",
        )
    return parser


def load_config(
    path: Path,
    command: str,
    *,
    seed: int | None = None,
    strict_paper: bool = False,
    output_dir: Path | None = None,
) -> RunConfig:
    """Parse a TOML run configuration; the subcommand decides the experiment."""
    with path.open("rb") as handle:
        payload: dict[str, Any] = tomllib.load(handle)
    payload["experiment"] = command
    if seed is not None:
        payload["seed"] = seed
    if strict_paper:
        payload["strict_paper"] = True
    if output_dir is not None:
        payload.setdefault("io", {})["output_dir"] = str(output_dir)
    return RunConfig.model_validate(payload)


def resolve_output_dir(config: RunConfig, settings: Settings) -> Path:
    if config.io.output_dir:
        return Path(config.io.output_dir)
    return Path(settings.default_output_dir) / config.experiment.value


async def _execute(config: RunConfig, output_dir: Path, settings: Settings) -> RunReport:
    if not settings.record_history:
        return await ExperimentWorker(settings=settings).run(config, output_dir)

    engine = create_engine(settings.database_url)
    try:
        await init_db(engine)
        worker = ExperimentWorker(
            settings=settings, session_factory=create_session_factory(engine)
        )
        return await worker.run(config, output_dir)
    finally:
        await close_db(engine)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_logging(settings.log_level)

    try:
        config = load_config(
            args.config,
            args.command,
            seed=args.seed,
            strict_paper=args.strict_paper or settings.strict_paper,
            output_dir=args.out,
        )
    except (OSError, ValueError) as exc:
        print(f"error: invalid configuration {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    output_dir = resolve_output_dir(config, settings)
    try:
        report = asyncio.run(_execute(config, output_dir, settings))
    except IntegratorFailure as exc:
        dump = exc.diagnostics.get("dump_dir", "")
        print(f"error: solver failure: {exc}", file=sys.stderr)
        print(f"diagnostic dump: {dump}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if report.validation is not None:
        for name in report.validation.failed_conditions:
            print(f"failed condition: {name}", file=sys.stderr)
    logger.info("Experiment finished experiment=%s passed=%s", config.experiment, report.passed)
    if config.experiment == ExperimentKind.simulate and report.final_l2 is not None:
        print(repr(report.final_l2))
    return EXIT_PASSED if report.passed else EXIT_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
