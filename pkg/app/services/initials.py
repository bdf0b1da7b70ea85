from __future__ import annotations

from pathlib import Path

import numpy as np

from app.errors import ConfigurationError
from app.numerics.fields import gaussian_bump_field, sine_mode_field
from app.numerics.grid import Grid, State
from app.numerics.norms import l2_norm
from app.numerics.snapshot import read_snapshot
from app.schemas import InitialKind, InitialSpec


def target_norms(spec: InitialSpec, rho: float | None = None) -> list[float]:
    upper = spec.l2_max if spec.l2_max is not None else spec.l2_min
    norms = np.linspace(spec.l2_min, upper, spec.count) if spec.count > 1 else [spec.l2_min]
    if spec.relative_to_rho:
        if rho is None:
            raise ConfigurationError("relative_to_rho needs the absorbing radius")
        return [float(item) * rho for item in norms]
    return [float(item) for item in norms]


def build_initials(
    grid: Grid,
    spec: InitialSpec,
    rng: np.random.Generator,
    *,
    rho: float | None = None,
) -> list[State]:
    if spec.kind == InitialKind.snapshot:
        assert spec.snapshot_path is not None
        state = read_snapshot(Path(spec.snapshot_path)).to_state(grid)
        return [State(u=state.u.copy(), t=state.t) for _ in range(spec.count)]

    norms = target_norms(spec, rho)
    if spec.kind == InitialKind.zero:
        return [State(u=grid.zeros()) for _ in norms]

    if spec.kind == InitialKind.sine_mode:
        mode = sine_mode_field(grid, spec.mode)
        scale = l2_norm(grid, mode)
        return [State(u=mode * (target / scale)) for target in norms]

    if spec.identical:
        base = gaussian_bump_field(grid, rng, max_bumps=spec.max_bumps, target_l2=1.0)
        return [State(u=base * target) for target in norms]
    return [
        State(u=gaussian_bump_field(grid, rng, max_bumps=spec.max_bumps, target_l2=target))
        for target in norms
    ]


def partner_field(
    grid: Grid, u: np.ndarray, rng: np.random.Generator, distance: float
) -> np.ndarray:
    """u plus a random smooth perturbation of L2 size distance."""
    return u + gaussian_bump_field(grid, rng, target_l2=distance)
