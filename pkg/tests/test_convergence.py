from __future__ import annotations

import numpy as np
import pytest

from app.errors import ConfigurationError
from app.model.problem import Problem
from app.numerics.grid import Grid
from app.schemas import PowerLawProfileSpec, ProblemSpec, StepConfig
from app.services.convergence import convergence_study, restrict_to_coarse, richardson_order


def _problem() -> Problem:
    return Problem.from_spec(ProblemSpec(p=2.0, dim=1))


def test_restriction_keeps_shared_nodes() -> None:
    problem = _problem()
    fine = Grid.build(problem, 1.0, 9)
    coarse = Grid.build(problem, 1.0, 5)

    restricted = restrict_to_coarse(fine, coarse, fine.sample(lambda x: x[:, 0]))

    np.testing.assert_allclose(restricted, [-0.5, 0.0, 0.5])


def test_restriction_requires_nested_grids() -> None:
    problem = _problem()
    fine = Grid.build(problem, 1.0, 8)

    with pytest.raises(ConfigurationError):
        restrict_to_coarse(fine, Grid.build(problem, 1.0, 5), fine.zeros())


def test_richardson_order() -> None:
    assert richardson_order(4.0, 1.0) == pytest.approx(2.0)
    assert richardson_order(0.0, 1.0) is None


def test_linear_problem_converges_at_expected_orders() -> None:
    report = convergence_study(
        _problem(),
        1.0,
        9,
        StepConfig(dt=0.01),
        lambda x: np.cos(0.5 * np.pi * x[:, 0]),
        0.1,
    )

    assert report.spatial_steps == pytest.approx([0.25, 0.125, 0.0625])
    assert report.time_steps == pytest.approx([0.01, 0.005, 0.0025])
    assert report.spatial_order is not None and 1.7 < report.spatial_order < 2.3
    assert report.temporal_order is not None and 0.85 < report.temporal_order < 1.15


def test_weighted_degenerate_problem_converges() -> None:
    problem = Problem.from_spec(ProblemSpec(p=3.0, dim=1, sigma=PowerLawProfileSpec(alpha=1.0)))

    report = convergence_study(
        problem,
        1.0,
        9,
        StepConfig(dt=0.01),
        lambda x: np.cos(0.5 * np.pi * x[:, 0]),
        0.1,
    )

    assert report.spatial_order is not None and report.spatial_order >= 1.0
    assert report.temporal_order is not None and report.temporal_order >= 0.9
