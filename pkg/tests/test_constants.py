from __future__ import annotations

import numpy as np
import pytest

from app.errors import ConfigurationError
from app.model.problem import Problem
from app.numerics.constants import (
    cutoff_ratio,
    embedding_ratio,
    estimate_cutoff_constant,
    estimate_embedding_constant,
    lowest_linear_mode,
)
from app.numerics.fields import gaussian_bump_field
from app.numerics.grid import Grid
from app.schemas import PowerLawProfileSpec, ProblemSpec


def _grid(dim: int = 1, m: int = 33, R: float = 4.0) -> Grid:
    problem = Problem.from_spec(
        ProblemSpec(dim=dim, sigma=PowerLawProfileSpec(alpha=1.0, offset=0.1))
    )
    return Grid.build(problem, R, m)


def test_zero_field_has_no_embedding_ratio() -> None:
    grid = _grid()
    plane = _grid(dim=2, m=9)

    assert embedding_ratio(grid, grid.zeros(), 2.0) is None
    assert cutoff_ratio(plane, plane.zeros(), 1.0) is None


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_embedding_ratio_never_exceeds_one(p: float) -> None:
    grid = _grid()
    rng = np.random.default_rng(1)

    for _ in range(20):
        ratio = embedding_ratio(grid, gaussian_bump_field(grid, rng), p)
        assert ratio is not None and 0.0 < ratio <= 1.0


def test_embedding_estimate_dominates_sampled_fields() -> None:
    grid = _grid(dim=2, m=13)
    estimate = estimate_embedding_constant(
        grid, 3.0, trials=40, optimizer_steps=3, rng=np.random.default_rng(2)
    )
    rng = np.random.default_rng(3)

    assert estimate <= 1.02 * (1.0 + 1e-12)
    for _ in range(100):
        ratio = embedding_ratio(grid, gaussian_bump_field(grid, rng), 3.0)
        assert ratio is not None and ratio <= estimate


def test_lowest_linear_mode_is_a_candidate() -> None:
    grid = _grid()
    mode = lowest_linear_mode(grid)

    assert mode is not None
    ratio = embedding_ratio(grid, mode, 2.0)
    assert ratio is not None
    assert estimate_embedding_constant(grid, 2.0, trials=10, optimizer_steps=1) >= ratio


def test_embedding_estimate_requires_trials() -> None:
    with pytest.raises(ValueError):
        estimate_embedding_constant(_grid(), 2.0, trials=0)


def test_cutoff_constant_is_positive_in_two_dimensions() -> None:
    grid = _grid(dim=2, m=17)
    constant = estimate_cutoff_constant(grid, 1.0, trials=30, rng=np.random.default_rng(4))
    rng = np.random.default_rng(5)

    assert constant > 0.0
    for _ in range(20):
        ratio = cutoff_ratio(grid, gaussian_bump_field(grid, rng), 1.0)
        assert ratio is not None and ratio > 0.0


def test_cutoff_constant_rejects_other_dimensions() -> None:
    with pytest.raises(ConfigurationError):
        estimate_cutoff_constant(_grid(dim=1), 1.0)
    with pytest.raises(ValueError):
        estimate_cutoff_constant(_grid(dim=2, m=9), 0.0)
