from __future__ import annotations

import asyncio
import logging
import math
import time
from dataclasses import dataclass
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

import numpy as np
from sqlalchemy.ext.asyncio import AsyncSession, async_sessionmaker

from app.config import Settings
from app.errors import IntegratorFailure, StabilityViolationError, TrajectoryTimeoutError
from app.model.problem import Problem, problem_spec_to_toml
from app.models import ExperimentRun, TrajectoryRun
from app.numerics.constants import estimate_embedding_constant
from app.numerics.grid import Grid, State
from app.numerics.integrator import run_to_time
from app.numerics.ledger import CsvLedgerSink
from app.numerics.norms import l2_norm
from app.numerics.operator import DiscreteOperator
from app.numerics.snapshot import write_field_csv, write_snapshot
from app.schemas import ExperimentKind, ExperimentStatus, RunConfig, RunReport
from app.services.absorbing import absorbing_radius, absorbing_test
from app.services.attractor import attractor_sample, summarize_attractor
from app.services.compactness import compactness_probe
from app.services.config_hash import build_config_hash
from app.services.contraction import contraction_test
from app.services.initials import build_initials, partner_field
from app.services.orchestrator import (
    EnsembleRun,
    TrajectoryRunResult,
    format_exception_message,
    uniform_checkpoints,
)
from app.services.reports import write_failure_dump, write_report
from app.services.validation import run_validation

logger = logging.getLogger(__name__)

REPORT_NAME = "report.json"
PROBLEM_NAME = "problem.toml"
FAILURE_DIR = "failure"


def _utcnow() -> datetime:
    return datetime.now(UTC)


def _as_integrator_failure(
    exc: StabilityViolationError | TrajectoryTimeoutError, config: RunConfig, grid: Grid
) -> IntegratorFailure:
    state = exc.state if exc.state is not None else State(u=grid.zeros())
    diagnostics: dict[str, Any] = {
        "t": state.t,
        "dt_requested": config.stepping.dt,
        "dt_last": config.stepping.dt,
        "halvings": 0,
        "reason": format_exception_message(exc),
    }
    if isinstance(exc, StabilityViolationError):
        diagnostics["explicit_dt_limit"] = exc.limit
    else:
        diagnostics["trajectory_index"] = exc.index
    return IntegratorFailure(str(exc), state=state, diagnostics=diagnostics)


@dataclass(slots=True)
class TrajectoryRecord:
    index: int
    status: str
    latency_ms: int
    steps: int = 0
    final_l2: float | None = None
    error_message: str | None = None


def _records_from_results(
    grid: Grid, results: list[TrajectoryRunResult]
) -> list[TrajectoryRecord]:
    records = []
    for result in results:
        outcome = result.outcome
        records.append(
            TrajectoryRecord(
                index=result.index,
                status=result.status,
                latency_ms=result.latency_ms,
                steps=len(outcome.ledger.rows) if outcome else 0,
                final_l2=l2_norm(grid, outcome.final.u) if outcome else None,
                error_message=result.error_message,
            )
        )
    return records


class ExperimentWorker:
    """Runs one configured experiment, writes its artifacts and records the run history."""

    def __init__(
        self,
        *,
        settings: Settings,
        session_factory: async_sessionmaker[AsyncSession] | None = None,
    ) -> None:
        self._settings = settings
        self._session_factory = session_factory

    async def run(self, config: RunConfig, output_dir: Path) -> RunReport:
        config_hash = build_config_hash(config)
        experiment_id = await self._create_record(config, config_hash)
        logger.info(
            "Running experiment experiment=%s config_hash=%s", config.experiment, config_hash
        )
        records: list[TrajectoryRecord] = []
        try:
            report = await self._dispatch(config, config_hash, output_dir, records)
        except (IntegratorFailure, StabilityViolationError, TrajectoryTimeoutError) as exc:
            grid = Grid.from_spec(Problem.from_spec(config.problem), config.grid)
            if isinstance(exc, IntegratorFailure):
                failure = exc
            else:
                failure = _as_integrator_failure(exc, config, grid)
            dump = write_failure_dump(output_dir / FAILURE_DIR, grid, failure)
            failure.diagnostics["dump_dir"] = str(dump)
            logger.exception("Experiment failed experiment_id=%s", experiment_id)
            await self._mark_failed(experiment_id, failure, records)
            if failure is exc:
                raise
            raise failure from exc
        except Exception as exc:
            logger.exception("Experiment failed experiment_id=%s", experiment_id)
            await self._mark_failed(experiment_id, exc, records)
            raise

        write_report(output_dir / REPORT_NAME, report)
        problem_toml = problem_spec_to_toml(config.problem)
        (output_dir / PROBLEM_NAME).write_text(problem_toml, encoding="utf-8")
        await self._persist_result(experiment_id, report, records)
        return report

    async def _dispatch(
        self,
        config: RunConfig,
        config_hash: str,
        output_dir: Path,
        records: list[TrajectoryRecord],
    ) -> RunReport:
        problem = Problem.from_spec(config.problem)
        if config.experiment == ExperimentKind.validate:
            summary = run_validation(problem, config.grid, config.run, self._settings)
            return RunReport(
                experiment=config.experiment,
                spec_hash=config_hash,
                passed=summary.passed,
                validation=summary,
            )

        grid = Grid.from_spec(problem, config.grid)
        rng = np.random.default_rng(config.seed)
        handlers = {
            ExperimentKind.simulate: self._simulate,
            ExperimentKind.contract: self._contract,
            ExperimentKind.absorb: self._absorb,
            ExperimentKind.compact: self._compact,
            ExperimentKind.attractor: self._attractor,
        }
        report = await handlers[config.experiment](
            config, problem, grid, rng, output_dir, records
        )
        return report.model_copy(update={"spec_hash": config_hash})

    async def _simulate(
        self,
        config: RunConfig,
        problem: Problem,
        grid: Grid,
        rng: np.random.Generator,
        output_dir: Path,
        records: list[TrajectoryRecord],
    ) -> RunReport:
        initial = build_initials(grid, config.initial.model_copy(update={"count": 1}), rng)[0]
        op = DiscreteOperator(grid, problem.p)
        every = config.io.snapshot_every
        formats = self._settings.snapshot_formats

        def _snapshot(state: State, steps: int) -> None:
            if every and steps % every == 0:
                stem = output_dir / "snapshots" / f"step_{steps:06d}"
                self._write_state(stem, grid, state, formats)

        started = time.perf_counter()
        with CsvLedgerSink(output_dir / config.io.ledger_path) as sink:
            final, ledger = await asyncio.to_thread(
                run_to_time,
                initial,
                max(config.run.T_final, initial.t),
                config.stepping,
                op,
                problem.f,
                sink,
                on_step=_snapshot,
            )
        self._write_state(output_dir / "final", grid, final, formats)
        final_l2 = l2_norm(grid, final.u)
        records.append(
            TrajectoryRecord(
                index=0,
                status="success",
                latency_ms=int((time.perf_counter() - started) * 1000),
                steps=len(ledger.rows),
                final_l2=final_l2,
            )
        )
        return RunReport(
            experiment=config.experiment,
            spec_hash="",
            passed=True,
            final_l2=final_l2,
            notes=[f"cumulative_fu_u={ledger.cumulative_fu_u()!r}"],
        )

    async def _contract(
        self,
        config: RunConfig,
        problem: Problem,
        grid: Grid,
        rng: np.random.Generator,
        output_dir: Path,
        records: list[TrajectoryRecord],
    ) -> RunReport:
        initials = build_initials(grid, config.initial, rng)
        partners = [
            partner_field(grid, state.u, rng, config.initial.partner_distance)
            for state in initials
        ]
        reports = []
        for index, (first, second) in enumerate(zip(initials, partners, strict=True)):
            started = time.perf_counter()
            report = await asyncio.to_thread(
                contraction_test,
                problem,
                grid,
                first.u,
                second,
                config.run.T_final,
                config.stepping,
                checkpoints=config.run.checkpoints,
            )
            records.append(
                TrajectoryRecord(
                    index=index,
                    status="success",
                    latency_ms=int((time.perf_counter() - started) * 1000),
                )
            )
            reports.append(report)
        return RunReport(
            experiment=config.experiment,
            spec_hash="",
            passed=all(item.passed for item in reports),
            contraction=reports,
            notes=["ratios use the backward Euler growth factor prod 1/(1 - c dt)"],
        )

    def _embedding_constant(self, config: RunConfig, grid: Grid, rng: np.random.Generator) -> float:
        return estimate_embedding_constant(
            grid,
            config.problem.p,
            config.run.embedding_trials,
            config.run.optimizer_steps,
            rng=rng,
        )

    async def _absorb(
        self,
        config: RunConfig,
        problem: Problem,
        grid: Grid,
        rng: np.random.Generator,
        output_dir: Path,
        records: list[TrajectoryRecord],
    ) -> RunReport:
        constant = await asyncio.to_thread(self._embedding_constant, config, grid, rng)
        rho = math.sqrt(absorbing_radius(grid, constant).rho_sq)
        initials = build_initials(grid, config.initial, rng, rho=rho)
        results: list[TrajectoryRunResult] = []
        try:
            report = await absorbing_test(
                problem,
                grid,
                initials,
                config.run.T_final,
                config.stepping,
                embedding_constant=constant,
                timeout_seconds=self._settings.trajectory_timeout_seconds,
                max_parallel=self._settings.max_parallel_trajectories,
                results=results,
            )
        finally:
            records.extend(_records_from_results(grid, results))
        return RunReport(
            experiment=config.experiment,
            spec_hash="",
            passed=report.passed,
            rho_sq=report.rho_sq,
            c1_h=report.c1_h,
            c1_emp=report.c1_emp,
            entries=report.entries,
            notes=[f"embedding_constant={constant!r}"],
        )

    async def _compact(
        self,
        config: RunConfig,
        problem: Problem,
        grid: Grid,
        rng: np.random.Generator,
        output_dir: Path,
        records: list[TrajectoryRecord],
    ) -> RunReport:
        initials = build_initials(grid, config.initial, rng)
        horizon = config.run.T_final
        run = EnsembleRun(
            problem=problem,
            grid=grid,
            cfg=config.stepping,
            initials=initials,
            horizon=horizon,
            checkpoint_times=uniform_checkpoints(horizon, config.run.checkpoints),
        )
        results: list[TrajectoryRunResult] = []
        try:
            report = await compactness_probe(
                run,
                eps=config.run.compact_eps,
                timeout_seconds=self._settings.trajectory_timeout_seconds,
                max_parallel=self._settings.max_parallel_trajectories,
                results=results,
            )
        finally:
            records.extend(_records_from_results(grid, results))
        return RunReport(
            experiment=config.experiment,
            spec_hash="",
            passed=report.passed,
            diameters=[[t, d] for t, d in zip(report.times, report.diameters, strict=True)],
            envelope=report.envelope,
            notes=[report.label],
        )

    async def _attractor(
        self,
        config: RunConfig,
        problem: Problem,
        grid: Grid,
        rng: np.random.Generator,
        output_dir: Path,
        records: list[TrajectoryRecord],
    ) -> RunReport:
        constant = await asyncio.to_thread(self._embedding_constant, config, grid, rng)
        radius = absorbing_radius(grid, constant)
        initials = build_initials(grid, config.initial, rng, rho=math.sqrt(radius.rho_sq))
        results: list[TrajectoryRunResult] = []
        try:
            times, samples = await attractor_sample(
                problem,
                grid,
                initials,
                config.run.T_burn,
                config.run.n_snapshots,
                config.stepping,
                interval=config.run.snapshot_interval,
                timeout_seconds=self._settings.trajectory_timeout_seconds,
                max_parallel=self._settings.max_parallel_trajectories,
                results=results,
            )
        finally:
            records.extend(_records_from_results(grid, results))
        for index, trajectory in enumerate(samples):
            for position, field in enumerate(trajectory):
                self._write_state(
                    output_dir / "attractor" / f"traj_{index:03d}_snap_{position:03d}",
                    grid,
                    State(u=field, t=times[position]),
                    self._settings.snapshot_formats,
                )
        summary = summarize_attractor(grid, times, samples, radius.rho_sq)
        return RunReport(
            experiment=config.experiment,
            spec_hash="",
            passed=summary.passed,
            rho_sq=radius.rho_sq,
            c1_h=radius.c1_h,
            attractor=summary,
        )

    @staticmethod
    def _write_state(stem: Path, grid: Grid, state: State, formats: list[str]) -> None:
        if "plap" in formats:
            write_snapshot(stem.with_suffix(".plap"), grid, state)
        if "csv" in formats:
            write_field_csv(stem.with_suffix(".csv"), grid, state)

    async def _create_record(self, config: RunConfig, config_hash: str) -> str | None:
        if self._session_factory is None:
            return None
        async with self._session_factory() as session:
            record = ExperimentRun(
                config_hash=config_hash,
                experiment=config.experiment.value,
                config_json=config.model_dump(mode="json"),
                status=ExperimentStatus.running.value,
                started_at=_utcnow(),
            )
            session.add(record)
            await session.commit()
            return record.id

    async def _persist_result(
        self, experiment_id: str | None, report: RunReport, records: list[TrajectoryRecord]
    ) -> None:
        if self._session_factory is None or experiment_id is None:
            return
        async with self._session_factory() as session:
            experiment = await session.get(ExperimentRun, experiment_id)
            if experiment is None:
                logger.warning("Experiment record missing experiment_id=%s", experiment_id)
                return
            self._add_trajectories(session, experiment_id, records)
            experiment.status = ExperimentStatus.completed.value
            experiment.passed = report.passed
            experiment.report_json = report.model_dump(mode="json")
            experiment.completed_at = _utcnow()
            await session.commit()

    async def _mark_failed(
        self, experiment_id: str | None, exc: Exception, records: list[TrajectoryRecord]
    ) -> None:
        if self._session_factory is None or experiment_id is None:
            return
        async with self._session_factory() as session:
            experiment = await session.get(ExperimentRun, experiment_id)
            if experiment is None:
                return
            self._add_trajectories(session, experiment_id, records)
            experiment.status = ExperimentStatus.failed.value
            experiment.error_message = format_exception_message(exc)
            experiment.completed_at = _utcnow()
            await session.commit()

    @staticmethod
    def _add_trajectories(
        session: AsyncSession, experiment_id: str, records: list[TrajectoryRecord]
    ) -> None:
        for record in records:
            session.add(
                TrajectoryRun(
                    experiment_id=experiment_id,
                    trajectory_index=record.index,
                    status=record.status,
                    latency_ms=record.latency_ms,
                    steps=record.steps,
                    final_l2=record.final_l2,
                    error_message=record.error_message,
                )
            )

