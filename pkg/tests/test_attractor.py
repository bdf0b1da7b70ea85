from __future__ import annotations

import numpy as np
import pytest

from app.model.problem import Problem
from app.numerics.fields import gaussian_bump_field
from app.numerics.grid import Grid, State
from app.schemas import ConstantProfileSpec, OddPowerSpec, ProblemSpec, StepConfig
from app.services.attractor import attractor_sample, snapshot_times, summarize_attractor


def test_snapshot_times_follow_burn_in() -> None:
    assert snapshot_times(2.0, 3, 0.5) == [2.0, 2.5, 3.0]


@pytest.mark.asyncio
async def test_forced_ensemble_settles_inside_absorbing_ball() -> None:
    problem = Problem.from_spec(
        ProblemSpec(p=3.0, f=OddPowerSpec(q=3.0), g=ConstantProfileSpec(value=0.2))
    )
    grid = Grid.build(problem, 4.0, 33)
    rng = np.random.default_rng(0)
    initials = [State(u=gaussian_bump_field(grid, rng, target_l2=float(n))) for n in (1, 5, 10)]

    times, samples = await attractor_sample(
        problem, grid, initials, 3.0, 3, StepConfig(dt=0.1), interval=0.5
    )
    report = summarize_attractor(grid, times, samples, rho_sq=10.0)

    assert times == [3.0, 3.5, 4.0]
    assert [len(trajectory) for trajectory in samples] == [3, 3, 3]
    assert report.inside_absorbing and report.passed
    assert report.spread <= 11.0 * (1.0 / 1.1) ** 40
    assert len(report.snapshot_l2) == 3


def test_summary_flags_samples_outside_ball() -> None:
    problem = Problem.from_spec(ProblemSpec())
    grid = Grid.build(problem, 1.0, 9)
    field = np.ones(grid.size)

    report = summarize_attractor(grid, [1.0], [[field]], rho_sq=0.5)

    assert not report.passed
    assert report.spread == 0.0
