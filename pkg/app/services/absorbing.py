from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from app.model.problem import Problem
from app.numerics.grid import Grid, State
from app.numerics.ledger import EnergyLedger
from app.numerics.norms import l2_norm
from app.schemas import AbsorbEntry, AbsorbReport, StepConfig
from app.services.orchestrator import (
    EnsembleRun,
    TrajectoryRunResult,
    execute_trajectories,
    require_outcomes,
)

logger = logging.getLogger(__name__)

_EXIT_TOLERANCE = 1e-12


@dataclass(frozen=True, slots=True)
class AbsorbingRadius:
    """Discrete constants of the energy inequality d/dt|u|^2 + c1 |u|^2 <= c2 |g|^2 + 2.

    c1_h = min(1, C^-2) / 2 follows from 1 + E >= E^(2/p) and |u| <= C |u|_W;
    Young's inequality on <g, u> with the same split gives c2_h = 2 / c1_h.
    """

    embedding_constant: float
    c1_h: float
    c2_h: float
    g_l2_sq: float

    @property
    def rho_sq(self) -> float:
        return (self.c2_h * self.g_l2_sq + 2.0) / self.c1_h + 1.0


def absorbing_radius(grid: Grid, embedding_constant: float) -> AbsorbingRadius:
    if embedding_constant <= 0:
        raise ValueError("embedding constant must be positive")
    c1 = 0.5 * min(1.0, embedding_constant**-2)
    return AbsorbingRadius(
        embedding_constant=embedding_constant,
        c1_h=c1,
        c2_h=2.0 / c1,
        g_l2_sq=l2_norm(grid, grid.g_nodes) ** 2,
    )


def norm_history(
    initial: State, initial_l2_sq: float, ledger: EnergyLedger
) -> tuple[np.ndarray, np.ndarray]:
    times = np.concatenate([[initial.t], ledger.times])
    values = np.concatenate([[initial_l2_sq], ledger.l2_sq])
    return times, values


def entry_time(times: np.ndarray, l2_sq: np.ndarray, rho_sq: float) -> tuple[float | None, bool]:
    """First time with |u|^2 <= rho^2, and whether the trajectory leaves again afterwards."""
    inside = np.flatnonzero(l2_sq <= rho_sq)
    if inside.size == 0:
        return None, False
    first = int(inside[0])
    exited = bool(np.any(l2_sq[first:] > rho_sq * (1.0 + _EXIT_TOLERANCE)))
    return float(times[first]), exited


def fit_decay_rate(times: np.ndarray, l2_sq: np.ndarray, threshold: float) -> float | None:
    """Least-squares rate c with |u|^2 ~ exp(-c t) while |u|^2 exceeds threshold."""
    mask = l2_sq > threshold
    if np.count_nonzero(mask) < 2:
        return None
    slope, _ = np.polyfit(times[mask], np.log(l2_sq[mask]), 1)
    return float(-slope)


async def absorbing_test(
    problem: Problem,
    grid: Grid,
    initials: Sequence[State],
    T: float,
    cfg: StepConfig,
    *,
    embedding_constant: float,
    timeout_seconds: float = 600.0,
    max_parallel: int = 4,
    results: list[TrajectoryRunResult] | None = None,
) -> AbsorbReport:
    radius = absorbing_radius(grid, embedding_constant)
    rho_sq = radius.rho_sq
    run = EnsembleRun(problem=problem, grid=grid, cfg=cfg, initials=list(initials), horizon=T)
    raw = await execute_trajectories(run, timeout_seconds, max_parallel)
    if results is not None:
        results.extend(raw)
    outcomes = require_outcomes(raw)

    entries: list[AbsorbEntry] = []
    rates: list[float] = []
    for index, (initial, outcome) in enumerate(zip(run.initials, outcomes, strict=True)):
        initial_l2_sq = l2_norm(grid, initial.u) ** 2
        times, values = norm_history(initial, initial_l2_sq, outcome.ledger)
        entered, exited = entry_time(times, values, rho_sq)
        rate = fit_decay_rate(times, values, 2.0 * rho_sq)
        if rate is not None:
            rates.append(rate)
        entries.append(
            AbsorbEntry(
                index=index,
                initial_l2=initial_l2_sq**0.5,
                entry_time=entered,
                exited_after_entry=exited,
                decay_rate=rate,
            )
        )

    c1_emp = min(rates) if rates else None
    all_absorbed = all(
        entry.entry_time is not None and not entry.exited_after_entry for entry in entries
    )
    rate_ok = c1_emp is None or c1_emp >= radius.c1_h
    logger.info(
        "Absorbing test rho_sq=%.6g c1_h=%.6g c1_emp=%s absorbed=%s",
        rho_sq,
        radius.c1_h,
        c1_emp,
        all_absorbed,
    )
    return AbsorbReport(
        passed=all_absorbed and rate_ok,
        rho_sq=rho_sq,
        c1_h=radius.c1_h,
        c2_h=radius.c2_h,
        embedding_constant=embedding_constant,
        c1_emp=c1_emp,
        horizon=T,
        entries=entries,
    )
