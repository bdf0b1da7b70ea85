from __future__ import annotations

import math

import numpy as np

from app.numerics.grid import Grid


def face_magnitudes(grid: Grid, u: np.ndarray) -> list[np.ndarray]:
    """|grad u| at every face, one array per face family."""
    magnitudes = []
    for normal, tangential in grid.face_gradients(u):
        if tangential is None:
            magnitudes.append(np.abs(normal))
        else:
            magnitudes.append(np.sqrt(normal * normal + tangential * tangential))
    return magnitudes


def l2_norm(grid: Grid, u: np.ndarray) -> float:
    field = grid.check_field(u)
    return math.sqrt(float(np.dot(field, field)) * grid.cell_volume)


def beta_l2_norm(grid: Grid, u: np.ndarray) -> float:
    field = grid.check_field(u)
    total = float(np.dot(grid.beta_nodes * field, field)) * grid.cell_volume
    return math.sqrt(max(total, 0.0))


def grad_p_energy(grid: Grid, u: np.ndarray, p: float) -> float:
    """Quadrature of sigma |grad u|^p over the grid faces."""
    total = 0.0
    for family, magnitude in zip(grid.faces, face_magnitudes(grid, u), strict=True):
        total += float(np.sum(family.sigma * np.power(magnitude, p)))
    return total * grid.face_weight


def weighted_grad_p_norm(grid: Grid, u: np.ndarray, p: float) -> float:
    if p < 2:
        raise ValueError("p must be >= 2")
    return grad_p_energy(grid, u, p) ** (1.0 / p)


def w_norm(grid: Grid, u: np.ndarray, p: float) -> float:
    return weighted_grad_p_norm(grid, u, p) + beta_l2_norm(grid, u)


def wb_norm(grid: Grid, u: np.ndarray, p: float) -> float:
    field = grid.check_field(u)
    sup = float(np.max(np.abs(field))) if field.size else 0.0
    return w_norm(grid, field, p) + sup


def truncate_Bk(u: np.ndarray, k: float) -> np.ndarray:
    if k <= 0:
        raise ValueError("truncation level k must be positive")
    return np.clip(np.asarray(u, dtype=float), -k, k)


def grad_lq_on_ball(grid: Grid, u: np.ndarray, q: float, radius: float) -> float:
    """(sum over faces inside B(0, radius) of |grad u|^q)^(1/q); a quasi-norm when q < 1."""
    total = 0.0
    for family, magnitude in zip(grid.faces, face_magnitudes(grid, u), strict=True):
        inside = np.sqrt(np.sum(family.midpoints * family.midpoints, axis=1)) < radius
        total += float(np.sum(np.power(magnitude[inside], q)))
    return (total * grid.face_weight) ** (1.0 / q)


def l2_outside_ball(grid: Grid, u: np.ndarray, radius: float) -> float:
    field = grid.check_field(u)
    outside = grid.interior_radius >= radius
    return math.sqrt(float(np.dot(field[outside], field[outside])) * grid.cell_volume)


def l2_distance(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    return l2_norm(grid, np.asarray(u, dtype=float) - np.asarray(v, dtype=float))
