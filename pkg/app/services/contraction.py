from __future__ import annotations

import logging
import math

import numpy as np

from app.errors import ConfigurationError, DegenerateInputError
from app.model.problem import Problem
from app.numerics.grid import Grid, State
from app.numerics.integrator import run_many_to_time
from app.numerics.norms import l2_distance
from app.numerics.operator import DiscreteOperator
from app.schemas import ContractionReport, Scheme, StepConfig
from app.services.orchestrator import uniform_checkpoints

logger = logging.getLogger(__name__)

CONTRACTION_TOLERANCE = 1e-8


def discrete_growth_rate(c: float, dt: float, scheme: Scheme = Scheme.implicit) -> float:
    """Per-unit-time growth of the backward Euler bound prod 1/(1 - c dt); tends to c as dt -> 0."""
    if scheme != Scheme.implicit or c == 0.0:
        return c
    if c * dt >= 1.0:
        raise ConfigurationError("dt * c must be < 1 for the implicit contraction bound")
    return -math.log1p(-c * dt) / dt


def contraction_test(
    problem: Problem,
    grid: Grid,
    u0: np.ndarray,
    v0: np.ndarray,
    T: float,
    cfg: StepConfig,
    *,
    checkpoints: int = 16,
    c: float | None = None,
) -> ContractionReport:
    """Co-evolve two trajectories and compare their distance with e^{ct} ||u0 - v0||."""
    initial_distance = l2_distance(grid, u0, v0)
    if initial_distance == 0.0:
        raise DegenerateInputError("initial data coincide; contraction ratio is undefined")
    rate = problem.c_mono if c is None else c
    growth = discrete_growth_rate(rate, cfg.dt, cfg.scheme)
    op = DiscreteOperator(grid, problem.p)

    states = [State(u=np.asarray(u0, dtype=float)), State(u=np.asarray(v0, dtype=float))]
    times = [0.0]
    ratios = [1.0]
    strict_ratios = [1.0]
    for target in uniform_checkpoints(T, checkpoints):
        states, _ = run_many_to_time(states, target, cfg, op, problem.f)
        distance = l2_distance(grid, states[0].u, states[1].u)
        times.append(states[0].t)
        ratios.append(distance / (math.exp(growth * states[0].t) * initial_distance))
        strict_ratios.append(distance / (math.exp(rate * states[0].t) * initial_distance))

    max_ratio = max(ratios)
    max_strict_ratio = max(strict_ratios)
    logger.info(
        "Contraction test max_ratio=%.12g max_strict_ratio=%.12g c=%s",
        max_ratio,
        max_strict_ratio,
        rate,
    )
    return ContractionReport(
        passed=max_ratio <= 1.0 + CONTRACTION_TOLERANCE,
        c=rate,
        initial_distance=initial_distance,
        times=times,
        ratios=ratios,
        max_ratio=max_ratio,
        strict_ratios=strict_ratios,
        max_strict_ratio=max_strict_ratio,
    )
