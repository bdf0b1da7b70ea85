from __future__ import annotations

import numpy as np

from app.numerics.grid import Grid
from app.numerics.norms import l2_norm

# Bump parameters are stored row-wise as (center_0, ..., center_{n-1}, width, amplitude).


def random_bump_parameters(
    grid: Grid, rng: np.random.Generator, max_bumps: int = 5
) -> np.ndarray:
    count = int(rng.integers(1, max_bumps + 1))
    half = 0.5 * grid.R
    centers = rng.uniform(-half, half, size=(count, grid.n))
    min_width = 2.0 * grid.h
    max_width = max(grid.R / 6.0, 1.5 * min_width)
    widths = rng.uniform(min_width, max_width, size=(count, 1))
    amplitudes = rng.choice([-1.0, 1.0], size=(count, 1)) * rng.uniform(0.5, 1.5, size=(count, 1))
    return np.hstack([centers, widths, amplitudes])


def bump_field_from_parameters(grid: Grid, parameters: np.ndarray) -> np.ndarray:
    coords = grid.interior_coords
    field = np.zeros(grid.size)
    for row in np.atleast_2d(parameters):
        center = row[: grid.n]
        width = abs(row[grid.n])
        if width == 0.0:
            continue
        distance_sq = np.sum((coords - center) ** 2, axis=1)
        field += row[grid.n + 1] * np.exp(-distance_sq / (2.0 * width * width))
    return field


def gaussian_bump_field(
    grid: Grid,
    rng: np.random.Generator,
    *,
    max_bumps: int = 5,
    target_l2: float | None = None,
    max_attempts: int = 100,
) -> np.ndarray:
    """Sum of 1..max_bumps Gaussian bumps, rescaled to target_l2 when given."""
    for _ in range(max_attempts):
        field = bump_field_from_parameters(grid, random_bump_parameters(grid, rng, max_bumps))
        norm = l2_norm(grid, field)
        if norm > 0.0:
            if target_l2 is None:
                return field
            return field * (target_l2 / norm)
    raise ValueError("could not draw a nonzero bump field; grid too coarse for the bump widths")


def sine_mode_field(grid: Grid, mode: int = 1, amplitude: float = 1.0) -> np.ndarray:
    """Product of discrete Dirichlet sine modes.

    Exact eigenvector of the p = 2 stencil in 1-D and in normal-only mode.
    """
    m = grid.m_per_axis
    index = np.arange(1, m - 1)
    profile = np.sin(mode * np.pi * index / (m - 1))
    field = profile
    for _ in range(grid.n - 1):
        field = np.multiply.outer(field, profile)
    return amplitude * np.asarray(field, dtype=float).reshape(grid.size)


def discrete_sine_eigenvalue(grid: Grid, mode: int = 1) -> float:
    """Eigenvalue of the 1-D three-point Dirichlet Laplacian for sine_mode_field(mode)."""
    length = 2.0 * grid.R
    return float(4.0 / grid.h**2 * np.sin(mode * np.pi * grid.h / (2.0 * length)) ** 2)
