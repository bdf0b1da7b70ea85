from __future__ import annotations

import numpy as np
import pytest

from app.errors import ConfigurationError, NonFiniteFieldError
from app.model.problem import Problem
from app.numerics.fields import (
    discrete_sine_eigenvalue,
    gaussian_bump_field,
    sine_mode_field,
)
from app.numerics.grid import Grid, State
from app.numerics.norms import l2_norm
from app.schemas import (
    ConstantProfileSpec,
    GridSpec,
    PowerLawProfileSpec,
    ProblemSpec,
)


def _problem(**overrides) -> Problem:
    return Problem.from_spec(ProblemSpec(**overrides))


def test_grid_spacing_and_shapes_in_one_dimension() -> None:
    grid = Grid.build(_problem(), 2.0, 9)

    assert grid.h == pytest.approx(0.5)
    assert grid.interior_shape == (7,)
    assert grid.size == 7
    assert grid.node_coords.shape == (9, 1)
    assert int(grid.boundary_mask.sum()) == 2
    assert grid.sigma_faces.shape == (8,)
    assert grid.face_factor == 1.0


def test_grid_shapes_in_two_dimensions() -> None:
    grid = Grid.from_spec(_problem(dim=2), GridSpec(R=1.0, m_per_axis=5))

    assert grid.interior_shape == (3, 3)
    assert grid.size == 9
    assert grid.node_coords.shape == (25, 2)
    assert int(grid.boundary_mask.sum()) == 16
    assert grid.sigma_faces.shape == (2 * 4 * 3,)
    assert grid.face_factor == 0.5
    assert grid.face_weight == pytest.approx(0.5 * grid.h**2)


def test_normal_only_mode_drops_tangential_stencils() -> None:
    grid = Grid.build(_problem(dim=2), 1.0, 5, normal_only=True)

    assert all(family.tangential is None for family in grid.faces)
    assert grid.face_factor == 1.0


def test_sigma_sampled_at_face_midpoints_avoids_origin() -> None:
    grid = Grid.build(_problem(sigma=PowerLawProfileSpec(alpha=-1.0)), 1.0, 5)

    np.testing.assert_allclose(grid.faces[0].midpoints[:, 0], [-0.75, -0.25, 0.25, 0.75])
    assert np.all(np.isfinite(grid.sigma_faces))


@pytest.mark.parametrize(
    ("R", "m"),
    [(1.0, 2), (0.0, 5), (-1.0, 5)],
)
def test_invalid_grid_parameters_are_rejected(R: float, m: int) -> None:
    with pytest.raises(ConfigurationError):
        Grid.build(_problem(), R, m)


def test_negative_sigma_is_rejected() -> None:
    problem = _problem(sigma=ConstantProfileSpec(value=-1.0))

    with pytest.raises(ConfigurationError):
        Grid.build(problem, 1.0, 5)


def test_singular_beta_at_a_node_is_rejected() -> None:
    problem = _problem(beta=PowerLawProfileSpec(alpha=-1.0))

    with pytest.raises(ConfigurationError, match="singular at the origin"):
        Grid.build(problem, 1.0, 5)


def test_embed_pads_zero_boundary() -> None:
    grid = Grid.build(_problem(dim=2), 1.0, 4)
    full = grid.embed(np.array([1.0, 2.0, 3.0, 4.0]))

    assert full.shape == (4, 4)
    np.testing.assert_array_equal(full[1:3, 1:3], [[1.0, 2.0], [3.0, 4.0]])
    assert full[0].sum() == 0.0 and full[:, -1].sum() == 0.0


def test_sample_uses_interior_coordinates() -> None:
    grid = Grid.build(_problem(), 1.0, 5)

    np.testing.assert_array_equal(grid.sample(lambda x: x[:, 0]), [-0.5, 0.0, 0.5])


def test_check_field_rejects_wrong_shape() -> None:
    grid = Grid.build(_problem(), 1.0, 5)

    with pytest.raises(ValueError):
        grid.check_field(np.zeros(4))


def test_state_rejects_non_finite_values() -> None:
    with pytest.raises(NonFiniteFieldError):
        State(u=np.array([0.0, np.nan]))
    with pytest.raises(NonFiniteFieldError):
        State(u=np.array([np.inf]), t=1.0)


def test_with_source_rebinds_g() -> None:
    grid = Grid.build(_problem(), 1.0, 5)
    forced = grid.with_source(np.array([1.0, 2.0, 3.0]))

    np.testing.assert_array_equal(forced.g_nodes, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(grid.g_nodes, np.zeros(3))
    with pytest.raises(NonFiniteFieldError):
        grid.with_source(np.array([0.0, np.nan, 0.0]))


def test_gaussian_bump_field_hits_target_norm() -> None:
    grid = Grid.build(_problem(dim=2), 4.0, 21)
    rng = np.random.default_rng(3)

    for target in (0.5, 2.0, 40.0):
        assert l2_norm(grid, gaussian_bump_field(grid, rng, target_l2=target)) == pytest.approx(
            target
        )


def test_sine_mode_is_zero_at_boundary_and_matches_eigenvalue() -> None:
    grid = Grid.build(_problem(), 1.0, 33)
    mode = sine_mode_field(grid, 1)
    second_difference = -(
        np.append(mode[1:], 0.0) - 2.0 * mode + np.insert(mode[:-1], 0, 0.0)
    ) / grid.h**2

    np.testing.assert_allclose(
        second_difference, discrete_sine_eigenvalue(grid, 1) * mode, rtol=1e-10, atol=1e-12
    )
