from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from app.model.problem import Problem
from app.numerics.fields import gaussian_bump_field
from app.numerics.grid import Grid
from app.numerics.norms import (
    beta_l2_norm,
    l2_distance,
    l2_norm,
    l2_outside_ball,
    truncate_Bk,
    w_norm,
    wb_norm,
    weighted_grad_p_norm,
)
from app.schemas import ConstantProfileSpec, PowerLawProfileSpec, ProblemSpec


def _grid(
    *,
    dim: int = 1,
    R: float = 1.0,
    m: int = 5,
    sigma=None,
    beta=None,
    normal_only: bool = False,
) -> Grid:
    spec = ProblemSpec(
        dim=dim,
        sigma=sigma or ConstantProfileSpec(),
        beta=beta or ConstantProfileSpec(),
    )
    return Grid.build(Problem.from_spec(spec), R, m, normal_only=normal_only)


def test_l2_norm_of_zero_is_zero() -> None:
    grid = _grid()

    assert l2_norm(grid, grid.zeros()) == 0.0
    assert weighted_grad_p_norm(grid, grid.zeros(), 3.0) == 0.0
    assert w_norm(grid, grid.zeros(), 2.0) == 0.0


def test_l2_norm_two_node_arithmetic() -> None:
    grid = _grid(R=0.75, m=4)

    assert grid.h == pytest.approx(0.5)
    assert l2_norm(grid, np.array([3.0, 4.0])) == pytest.approx(math.sqrt(12.5), rel=1e-14)


def test_l2_norm_of_gaussian_matches_closed_form() -> None:
    grid = _grid(R=8.0, m=1601)
    u = grid.sample(lambda x: np.exp(-x[:, 0] ** 2))

    assert l2_norm(grid, u) == pytest.approx((math.pi / 2.0) ** 0.25, abs=1e-4)


def test_linear_ramp_gradient_norm_on_five_nodes() -> None:
    grid = _grid(R=1.0, m=5)
    ramp = np.array([-1.0, 0.0, 1.0])

    assert weighted_grad_p_norm(grid, ramp, 2.0) == pytest.approx(math.sqrt(8.0), rel=1e-14)


def test_weighted_tent_gradient_norm() -> None:
    grid = _grid(R=2.0, m=401, sigma=PowerLawProfileSpec(alpha=1.0))
    u = grid.sample(lambda x: np.clip(np.minimum(x[:, 0], 2.0 - x[:, 0]), 0.0, None))

    assert weighted_grad_p_norm(grid, u, 3.0) == pytest.approx(2.0 ** (1.0 / 3.0), rel=1e-10)


def test_gradient_norm_requires_p_at_least_two() -> None:
    grid = _grid()

    with pytest.raises(ValueError):
        weighted_grad_p_norm(grid, grid.zeros(), 1.5)


def test_beta_norm_scales_with_constant_beta() -> None:
    grid = _grid(R=4.0, m=33, beta=ConstantProfileSpec(value=4.0))
    u = gaussian_bump_field(grid, np.random.default_rng(1), target_l2=3.0)

    assert l2_norm(grid, u) == pytest.approx(3.0)
    assert beta_l2_norm(grid, u) == pytest.approx(6.0)


def test_beta_norm_matches_fine_quadrature() -> None:
    grid = _grid(R=6.0, m=1201, beta=PowerLawProfileSpec(alpha=2.0, cap=1.0))
    u = grid.sample(lambda x: np.exp(-x[:, 0] ** 2))
    xs = np.linspace(-6.0, 6.0, 200001)
    integrand = np.minimum(xs * xs, 1.0) * np.exp(-2.0 * xs * xs)

    assert beta_l2_norm(grid, u) == pytest.approx(
        math.sqrt(trapezoid(integrand, xs)), abs=1e-3
    )


def test_w_and_wb_norms_compose() -> None:
    grid = _grid(R=1.0, m=5)
    ramp = np.array([-1.0, 0.0, 1.0])

    expected = math.sqrt(8.0) + l2_norm(grid, ramp)
    assert w_norm(grid, ramp, 2.0) == pytest.approx(expected)
    assert wb_norm(grid, ramp, 2.0) == pytest.approx(expected + 1.0)


def test_truncation_examples() -> None:
    np.testing.assert_array_equal(
        truncate_Bk(np.array([3.0, -3.0, 1.0]), 2.0), np.array([2.0, -2.0, 1.0])
    )
    u = np.array([0.5, -0.25, 0.0])
    np.testing.assert_array_equal(truncate_Bk(u, 1.0), u)
    with pytest.raises(ValueError):
        truncate_Bk(u, 0.0)


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    k=st.sampled_from([0.1, 1.0, 10.0]),
)
def test_truncation_is_pointwise_one_lipschitz(seed: int, k: float) -> None:
    rng = np.random.default_rng(seed)
    u = rng.normal(scale=5.0, size=200)
    v = rng.normal(scale=5.0, size=200)

    assert np.all(np.abs(truncate_Bk(u, k) - truncate_Bk(v, k)) <= np.abs(u - v))


def test_truncation_converges_in_w_norm() -> None:
    grid = _grid(R=4.0, m=41)
    rng = np.random.default_rng(5)
    levels = [2.0**power for power in range(-3, 7)]
    for _ in range(50):
        u = gaussian_bump_field(grid, rng, target_l2=float(rng.uniform(0.5, 5.0)))
        errors = [w_norm(grid, u - truncate_Bk(u, k), 3.0) for k in levels]

        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:], strict=False))
        top = float(np.max(np.abs(u)))
        assert w_norm(grid, u - truncate_Bk(u, top), 3.0) == 0.0


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    scale=st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
)
def test_norms_are_absolutely_homogeneous(seed: int, scale: float) -> None:
    grid = _grid(dim=2, R=2.0, m=13)
    u = np.random.default_rng(seed).normal(size=grid.size)

    assert l2_norm(grid, scale * u) == pytest.approx(
        abs(scale) * l2_norm(grid, u), rel=1e-12, abs=1e-12
    )
    assert beta_l2_norm(grid, scale * u) == pytest.approx(
        abs(scale) * beta_l2_norm(grid, u), rel=1e-12, abs=1e-12
    )
    assert weighted_grad_p_norm(grid, scale * u, 3.0) == pytest.approx(
        abs(scale) * weighted_grad_p_norm(grid, u, 3.0), rel=1e-10, abs=1e-12
    )


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_norm_triangle_inequality(seed: int) -> None:
    grid = _grid(dim=2, R=2.0, m=13, sigma=PowerLawProfileSpec(alpha=1.0))
    rng = np.random.default_rng(seed)
    u = rng.normal(size=grid.size)
    v = rng.normal(size=grid.size)

    for norm in (l2_norm, beta_l2_norm):
        assert norm(grid, u + v) <= norm(grid, u) + norm(grid, v) + 1e-9
    for p in (2.0, 3.0, 4.0):
        assert weighted_grad_p_norm(grid, u + v, p) <= (
            weighted_grad_p_norm(grid, u, p) + weighted_grad_p_norm(grid, v, p) + 1e-9
        )


def test_exterior_norm_limits() -> None:
    grid = _grid(dim=2, R=2.0, m=9)
    u = np.random.default_rng(2).normal(size=grid.size)

    assert l2_outside_ball(grid, u, 0.0) == pytest.approx(l2_norm(grid, u))
    assert l2_outside_ball(grid, u, 10.0) == 0.0
    assert l2_distance(grid, u, u) == 0.0
