from __future__ import annotations

import asyncio
import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from app.errors import ConfigurationError, TrajectoryTimeoutError
from app.model.problem import Problem
from app.numerics.grid import Grid, State
from app.numerics.integrator import run_to_time
from app.numerics.ledger import EnergyLedger, LedgerSink
from app.numerics.operator import DiscreteOperator
from app.schemas import StepConfig

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class EnsembleRun:
    problem: Problem
    grid: Grid
    cfg: StepConfig
    initials: list[State]
    horizon: float
    checkpoint_times: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        for state in self.initials:
            self.grid.check_field(state.u)
        if any(b < a for a, b in zip(self.checkpoint_times, self.checkpoint_times[1:])):
            raise ConfigurationError("checkpoint times must be sorted")
        if self.checkpoint_times and self.checkpoint_times[-1] > self.horizon:
            raise ConfigurationError("checkpoint times must not exceed the horizon")

    @property
    def operator(self) -> DiscreteOperator:
        return DiscreteOperator(self.grid, self.problem.p)


@dataclass(slots=True)
class TrajectoryOutcome:
    final: State
    ledger: EnergyLedger
    checkpoints: list[State]


@dataclass(slots=True)
class TrajectoryRunResult:
    index: int
    status: str
    latency_ms: int
    outcome: TrajectoryOutcome | None
    error_message: str | None = None
    error: Exception | None = None


def uniform_checkpoints(horizon: float, count: int) -> list[float]:
    return [float(item) for item in np.linspace(horizon / count, horizon, count)]


def run_with_checkpoints(
    state: State,
    checkpoint_times: Sequence[float],
    horizon: float,
    cfg: StepConfig,
    op: DiscreteOperator,
    problem: Problem,
    sink: LedgerSink | None = None,
) -> TrajectoryOutcome:
    ledger = EnergyLedger(rows=[], start_time=state.t)
    checkpoints: list[State] = []
    current = state
    for target in [*checkpoint_times, horizon]:
        if target > current.t:
            current, segment = run_to_time(current, target, cfg, op, problem.f, sink)
            ledger.rows.extend(segment.rows)
        if len(checkpoints) < len(checkpoint_times):
            checkpoints.append(current)
    return TrajectoryOutcome(final=current, ledger=ledger, checkpoints=checkpoints)


async def execute_trajectories(
    run: EnsembleRun,
    timeout_seconds: float,
    max_parallel: int,
) -> list[TrajectoryRunResult]:
    """Evolve every initial state; results come back in trajectory-index order."""
    semaphore = asyncio.Semaphore(max_parallel)
    op = run.operator

    async def _guarded(index: int, state: State) -> TrajectoryRunResult:
        async with semaphore:
            return await _run_single(index, state, run, op, timeout_seconds)

    return await asyncio.gather(
        *[_guarded(index, state) for index, state in enumerate(run.initials)]
    )


async def _run_single(
    index: int,
    state: State,
    run: EnsembleRun,
    op: DiscreteOperator,
    timeout_seconds: float,
) -> TrajectoryRunResult:
    started = time.perf_counter()
    try:
        outcome = await asyncio.wait_for(
            asyncio.to_thread(
                run_with_checkpoints,
                state,
                run.checkpoint_times,
                run.horizon,
                run.cfg,
                op,
                run.problem,
            ),
            timeout=timeout_seconds,
        )
    except TimeoutError:
        message = f"Timed out after {timeout_seconds}s"
        return TrajectoryRunResult(
            index=index,
            status="timeout",
            latency_ms=int((time.perf_counter() - started) * 1000),
            outcome=None,
            error_message=message,
            error=TrajectoryTimeoutError(
                f"trajectory {index}: {message}", index=index, state=state
            ),
        )
    except Exception as exc:
        logger.warning("Trajectory failed index=%s error=%s", index, exc)
        return TrajectoryRunResult(
            index=index,
            status="error",
            latency_ms=int((time.perf_counter() - started) * 1000),
            outcome=None,
            error_message=format_exception_message(exc),
            error=exc,
        )

    latency_ms = int((time.perf_counter() - started) * 1000)
    logger.info(
        "Trajectory finished index=%s steps=%s latency_ms=%s",
        index,
        len(outcome.ledger.rows),
        latency_ms,
    )
    return TrajectoryRunResult(
        index=index, status="success", latency_ms=latency_ms, outcome=outcome
    )


def require_outcomes(results: Sequence[TrajectoryRunResult]) -> list[TrajectoryOutcome]:
    """Outcomes of a fully successful ensemble; re-raises the first trajectory error."""
    outcomes = []
    for result in results:
        if result.outcome is None:
            if result.error is not None:
                raise result.error
            raise RuntimeError(result.error_message or f"trajectory {result.index} failed")
        outcomes.append(result.outcome)
    return outcomes


def format_exception_message(exc: Exception) -> str:
    message = str(exc).strip()
    if message:
        return f"{type(exc).__name__}: {message}"
    return f"{type(exc).__name__}: no details provided"
