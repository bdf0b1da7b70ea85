from __future__ import annotations

import logging
import math
from collections.abc import Callable

import numpy as np

from app.errors import ConfigurationError
from app.model.problem import Problem
from app.numerics.grid import Grid, State
from app.numerics.integrator import run_to_time
from app.numerics.norms import l2_distance
from app.numerics.operator import DiscreteOperator
from app.schemas import ConvergenceReport, StepConfig

logger = logging.getLogger(__name__)

InitialProfile = Callable[[np.ndarray], np.ndarray]


def restrict_to_coarse(fine: Grid, coarse: Grid, u: np.ndarray) -> np.ndarray:
    """Values of a fine-grid field at the nodes shared with a nested coarse grid."""
    intervals_fine = fine.m_per_axis - 1
    intervals_coarse = coarse.m_per_axis - 1
    if fine.n != coarse.n or fine.R != coarse.R or intervals_fine % intervals_coarse:
        raise ConfigurationError("grids are not nested")
    ratio = intervals_fine // intervals_coarse
    shared = fine.embed(u)[(slice(None, None, ratio),) * fine.n]
    return shared[(slice(1, -1),) * fine.n].reshape(coarse.size)


def richardson_order(coarse_difference: float, fine_difference: float) -> float | None:
    if coarse_difference <= 0.0 or fine_difference <= 0.0:
        return None
    return math.log2(coarse_difference / fine_difference)


def _solve(
    problem: Problem, grid: Grid, cfg: StepConfig, initial: InitialProfile, T: float
) -> np.ndarray:
    state = State(u=grid.sample(initial))
    op = DiscreteOperator(grid, problem.p)
    final, _ = run_to_time(state, T, cfg, op, problem.f)
    return final.u


def convergence_study(
    problem: Problem,
    R: float,
    m_per_axis: int,
    cfg: StepConfig,
    initial: InitialProfile,
    T: float,
    *,
    normal_only: bool = False,
) -> ConvergenceReport:
    """Self-convergence on nested grids m, 2m-1, 4m-3 and time steps dt, dt/2, dt/4."""
    grids = [
        Grid.build(problem, R, (m_per_axis - 1) * factor + 1, normal_only=normal_only)
        for factor in (1, 2, 4)
    ]
    coarse = grids[0]
    spatial = [
        restrict_to_coarse(grid, coarse, _solve(problem, grid, cfg, initial, T)) for grid in grids
    ]
    spatial_differences = [
        l2_distance(coarse, spatial[0], spatial[1]),
        l2_distance(coarse, spatial[1], spatial[2]),
    ]

    steps = [cfg.dt, cfg.dt / 2.0, cfg.dt / 4.0]
    temporal = [
        _solve(problem, coarse, cfg.model_copy(update={"dt": dt}), initial, T) for dt in steps
    ]
    temporal_differences = [
        l2_distance(coarse, temporal[0], temporal[1]),
        l2_distance(coarse, temporal[1], temporal[2]),
    ]

    report = ConvergenceReport(
        spatial_steps=[grid.h for grid in grids],
        spatial_differences=spatial_differences,
        spatial_order=richardson_order(*spatial_differences),
        time_steps=steps,
        temporal_differences=temporal_differences,
        temporal_order=richardson_order(*temporal_differences),
    )
    logger.info(
        "Convergence study spatial_order=%s temporal_order=%s",
        report.spatial_order,
        report.temporal_order,
    )
    return report
