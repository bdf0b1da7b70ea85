from __future__ import annotations

import logging
import math

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from app.errors import ConfigurationError, DegenerateInputError
from app.numerics.fields import bump_field_from_parameters, random_bump_parameters
from app.numerics.grid import Grid
from app.numerics.norms import grad_lq_on_ball, l2_norm, l2_outside_ball, w_norm
from app.numerics.operator import DiscreteOperator

logger = logging.getLogger(__name__)

_DENSE_EIGEN_LIMIT = 400
_POLISHED_SEEDS = 3


def embedding_ratio(grid: Grid, u: np.ndarray, p: float) -> float | None:
    """||u||_2 / ||u||_W, or None for the zero field."""
    numerator = l2_norm(grid, u)
    if numerator == 0.0:
        return None
    denominator = w_norm(grid, u, p)
    if denominator == 0.0:
        raise DegenerateInputError("a nonzero field has zero W-norm; weights are not admissible")
    return numerator / denominator


def lowest_linear_mode(grid: Grid) -> np.ndarray | None:
    """Lowest eigenvector of the p = 2 operator, the maximizer of the quadratic ratio."""
    matrix = DiscreteOperator(grid, 2.0).lagged_matrix(grid.zeros())
    if grid.size <= _DENSE_EIGEN_LIMIT:
        _, vectors = np.linalg.eigh(matrix.toarray())
        return vectors[:, 0]
    try:
        _, vectors = eigsh(matrix, k=1, sigma=0.0, which="LM")
    except (ArpackNoConvergence, RuntimeError) as exc:
        logger.warning("Lowest-mode seed unavailable reason=%s", exc)
        return None
    return vectors[:, 0]


def _coordinate_ascent(
    grid: Grid, p: float, parameters: np.ndarray, ratio: float, steps: int
) -> float:
    current = parameters.copy()
    for _ in range(steps):
        improved = False
        for index in np.ndindex(current.shape):
            for direction in (1.0, -1.0):
                trial = current.copy()
                trial[index] += direction * grid.h
                candidate = embedding_ratio(grid, bump_field_from_parameters(grid, trial), p)
                if candidate is not None and candidate > ratio:
                    current, ratio, improved = trial, candidate, True
                    break
        if not improved:
            break
    return ratio


def estimate_embedding_constant(
    grid: Grid,
    p: float,
    trials: int = 200,
    optimizer_steps: int = 50,
    *,
    rng: np.random.Generator | None = None,
    margin: float = 0.02,
) -> float:
    """Upper estimate of sup ||u||_2 / ||u||_W over random smooth fields plus local ascent."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)

    seeds: list[tuple[float, np.ndarray]] = []
    while len(seeds) < trials:
        parameters = random_bump_parameters(grid, rng)
        ratio = embedding_ratio(grid, bump_field_from_parameters(grid, parameters), p)
        if ratio is not None:
            seeds.append((ratio, parameters))

    best = max(ratio for ratio, _ in seeds)
    mode = lowest_linear_mode(grid)
    if mode is not None:
        mode_ratio = embedding_ratio(grid, mode, p)
        if mode_ratio is not None:
            best = max(best, mode_ratio)

    seeds.sort(key=lambda item: item[0], reverse=True)
    for ratio, parameters in seeds[:_POLISHED_SEEDS]:
        best = max(best, _coordinate_ascent(grid, p, parameters, ratio, optimizer_steps))

    if not math.isfinite(best):
        raise DegenerateInputError("embedding ratio is unbounded on this grid")
    logger.info("Embedding constant estimated value=%.6g trials=%s", best, trials)
    return (1.0 + margin) * best


def cutoff_ratio(grid: Grid, u: np.ndarray, r: float) -> float | None:
    norm_sq = l2_norm(grid, u) ** 2
    if norm_sq == 0.0:
        return None
    exponent = 2.0 * grid.n / (grid.n + 2.0)
    gradient = grad_lq_on_ball(grid, u, exponent, 2.0 * r)
    exterior = l2_outside_ball(grid, u, r)
    return (gradient**2 + exterior**2) / norm_sq


def estimate_cutoff_constant(
    grid: Grid,
    r: float,
    trials: int = 200,
    *,
    rng: np.random.Generator | None = None,
) -> float:
    """Half the smallest observed cut-off ratio over random smooth fields.

    The ratio is (||grad u||_{L^q(B(0,2r))}^2 + ||u||_{L^2(|x|>r)}^2) / ||u||^2 with q = 2n/(n+2).
    """
    if grid.n != 2:
        raise ConfigurationError("the cut-off inequality is only checked for n = 2")
    if r <= 0:
        raise ValueError("r must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)

    ratios: list[float] = []
    while len(ratios) < trials:
        field = bump_field_from_parameters(grid, random_bump_parameters(grid, rng))
        ratio = cutoff_ratio(grid, field, r)
        if ratio is not None:
            ratios.append(ratio)
    constant = 0.5 * min(ratios)
    if constant <= 0.0:
        raise DegenerateInputError("cut-off ratio vanished for a nonzero field")
    return constant
