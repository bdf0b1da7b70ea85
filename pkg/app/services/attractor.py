from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from app.model.problem import Problem
from app.numerics.grid import Grid, State
from app.numerics.norms import l2_norm
from app.schemas import AttractorReport, StepConfig
from app.services.compactness import pairwise_distances
from app.services.orchestrator import (
    EnsembleRun,
    TrajectoryRunResult,
    execute_trajectories,
    require_outcomes,
)

logger = logging.getLogger(__name__)


def snapshot_times(T_burn: float, n_snapshots: int, interval: float) -> list[float]:
    return [T_burn + k * interval for k in range(n_snapshots)]


async def attractor_sample(
    problem: Problem,
    grid: Grid,
    initials: Sequence[State],
    T_burn: float,
    n_snapshots: int,
    cfg: StepConfig,
    *,
    interval: float = 0.5,
    timeout_seconds: float = 600.0,
    max_parallel: int = 4,
    results: list[TrajectoryRunResult] | None = None,
) -> tuple[list[float], list[list[np.ndarray]]]:
    """Post-burn-in snapshots per trajectory, an empirical sample of the attractor."""
    times = snapshot_times(T_burn, n_snapshots, interval)
    run = EnsembleRun(
        problem=problem,
        grid=grid,
        cfg=cfg,
        initials=list(initials),
        horizon=times[-1],
        checkpoint_times=times,
    )
    raw = await execute_trajectories(run, timeout_seconds, max_parallel)
    if results is not None:
        results.extend(raw)
    outcomes = require_outcomes(raw)
    return times, [[state.u for state in outcome.checkpoints] for outcome in outcomes]


def summarize_attractor(
    grid: Grid,
    times: list[float],
    samples: list[list[np.ndarray]],
    rho_sq: float,
) -> AttractorReport:
    norms = [[l2_norm(grid, field) for field in trajectory] for trajectory in samples]
    finals = [trajectory[-1] for trajectory in samples]
    spread = float(pairwise_distances(grid, finals).max()) if len(finals) > 1 else 0.0
    inside = all(value * value <= rho_sq for row in norms for value in row)
    logger.info("Attractor sample spread=%.6g inside_absorbing=%s", spread, inside)
    return AttractorReport(
        passed=inside,
        rho_sq=rho_sq,
        snapshot_times=times,
        snapshot_l2=norms,
        spread=spread,
        inside_absorbing=inside,
    )
