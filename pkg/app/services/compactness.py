from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np

from app.errors import ConfigurationError
from app.numerics.grid import Grid
from app.numerics.norms import l2_distance, l2_norm
from app.schemas import CompactReport, EnvelopeReport
from app.services.orchestrator import (
    EnsembleRun,
    TrajectoryRunResult,
    execute_trajectories,
    require_outcomes,
)

logger = logging.getLogger(__name__)

MIN_ENSEMBLE = 3


def envelope_kernel(T: float, eps: float, p: float) -> float:
    """log(T/2eps) for p = 2, ((p-1)/(p-2)) (T^a - (2eps)^a) with a = (p-2)/(p-1) for p > 2."""
    if p == 2.0:
        return math.log(T / (2.0 * eps))
    exponent = (p - 2.0) / (p - 1.0)
    return (p - 1.0) / (p - 2.0) * (T**exponent - (2.0 * eps) ** exponent)


def compactness_envelope(T: float, eps: float, p: float, c1: float, c5: float) -> float:
    if p < 2:
        raise ValueError("p must be >= 2")
    if eps <= 0 or T < 2.0 * eps:
        raise ConfigurationError("the envelope needs eps > 0 and T >= 2 eps")
    return 2.0 * c1 * c1 * eps / (T - eps) + c5 / (T - eps) * envelope_kernel(T, eps, p)


def pairwise_distances(grid: Grid, fields: Sequence[np.ndarray]) -> np.ndarray:
    count = len(fields)
    matrix = np.zeros((count, count))
    for i in range(count):
        for j in range(i + 1, count):
            matrix[i, j] = matrix[j, i] = l2_distance(grid, fields[i], fields[j])
    return matrix


def fit_envelope(
    times: Sequence[float],
    diameters_sq: Sequence[float],
    eps: float,
    p: float,
    c1: float,
) -> EnvelopeReport | None:
    """Fit c5 >= 0 on the early half of the checkpoints with t >= 2 eps, test on the late half."""
    eligible = [
        (t, d_sq) for t, d_sq in zip(times, diameters_sq, strict=True) if t >= 2.0 * eps
    ]
    if len(eligible) < 2:
        return None
    split = len(eligible) // 2
    fit, test = eligible[:split], eligible[split:]

    base = np.array([2.0 * c1 * c1 * eps / (t - eps) for t, _ in fit])
    kernel = np.array([envelope_kernel(t, eps, p) / (t - eps) for t, _ in fit])
    target = np.array([d_sq for _, d_sq in fit])
    denominator = float(np.dot(kernel, kernel))
    c5 = max(0.0, float(np.dot(target - base, kernel)) / denominator) if denominator else 0.0

    envelope_values = [compactness_envelope(t, eps, p, c1, c5) for t, _ in test]
    late_index = int(np.argmin([d_sq for _, d_sq in test]))
    late_min = test[late_index][1]
    late_envelope = envelope_values[late_index]
    return EnvelopeReport(
        eps=eps,
        p=p,
        c1=c1,
        c5=c5,
        fit_times=[t for t, _ in fit],
        test_times=[t for t, _ in test],
        envelope_values=envelope_values,
        late_min_diameter_sq=late_min,
        late_envelope=late_envelope,
        passed=late_min <= late_envelope * (1.0 + 1e-12),
    )


async def compactness_probe(
    run: EnsembleRun,
    *,
    eps: float | None = None,
    timeout_seconds: float = 600.0,
    max_parallel: int = 4,
    results: list[TrajectoryRunResult] | None = None,
) -> CompactReport:
    if len(run.initials) < MIN_ENSEMBLE:
        raise ConfigurationError(f"compactness probe needs at least {MIN_ENSEMBLE} trajectories")
    eps = run.horizon / 8.0 if eps is None else eps
    if run.horizon < 2.0 * eps:
        raise ConfigurationError("compactness probe needs T >= 2 eps")
    if not run.checkpoint_times:
        raise ConfigurationError("compactness probe needs checkpoint times")

    raw = await execute_trajectories(run, timeout_seconds, max_parallel)
    if results is not None:
        results.extend(raw)
    outcomes = require_outcomes(raw)
    grid = run.grid

    times = [run.initials[0].t]
    matrices = [pairwise_distances(grid, [state.u for state in run.initials])]
    for position, t in enumerate(run.checkpoint_times):
        times.append(t)
        matrices.append(
            pairwise_distances(grid, [outcome.checkpoints[position].u for outcome in outcomes])
        )
    diameters = [float(matrix.max()) for matrix in matrices]

    post_burn_in = [index for index, t in enumerate(times) if t >= eps]
    first = post_burn_in[0] if post_burn_in else 0
    shrinkage_passed = diameters[-1] <= diameters[first]

    c1 = max(
        [l2_norm(grid, state.u) for state in run.initials]
        + [l2_norm(grid, state.u) for outcome in outcomes for state in outcome.checkpoints]
    )
    envelope = fit_envelope(
        times[1:], [value**2 for value in diameters[1:]], eps, run.problem.p, c1
    )
    passed = shrinkage_passed and (envelope is None or envelope.passed)
    logger.info(
        "Compactness probe first_diameter=%.6g last_diameter=%.6g passed=%s",
        diameters[first],
        diameters[-1],
        passed,
    )
    return CompactReport(
        passed=passed,
        shrinkage_passed=shrinkage_passed,
        times=times,
        diameters=diameters,
        distance_matrices=[matrix.tolist() for matrix in matrices],
        envelope=envelope,
    )
