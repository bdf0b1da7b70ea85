from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from app.errors import NonFiniteFieldError, NonlinearityOverflowError, SolverStagnationError
from app.model.base import NonlinearityModel
from app.numerics.operator import DiscreteOperator
from app.schemas import StepConfig

logger = logging.getLogger(__name__)

_SCALAR_MAX_ITERATIONS = 200
_SCALAR_TOLERANCE = 1e-15
_BACKTRACK_LIMIT = 8


@dataclass(slots=True)
class SolveResult:
    u: np.ndarray
    picard_iterations: int
    newton_iterations: int
    relative_residual: float


def solve_scalar_resolvent(
    f: NonlinearityModel, dt: float, rhs: np.ndarray
) -> np.ndarray:
    """Nodewise root of s + dt * f(s) = rhs by safeguarded Newton with bisection fallback."""
    target = np.asarray(rhs, dtype=float)
    lo = np.minimum(target, 0.0)
    hi = np.maximum(target, 0.0)

    for _ in range(_SCALAR_MAX_ITERATIONS):
        low_bad = lo + dt * f.f(lo) - target > 0
        high_bad = hi + dt * f.f(hi) - target < 0
        if not (np.any(low_bad) or np.any(high_bad)):
            break
        width = hi - lo + 1.0
        lo = np.where(low_bad, lo - width, lo)
        hi = np.where(high_bad, hi + width, hi)

    s = np.clip(target, lo, hi)
    for _ in range(_SCALAR_MAX_ITERATIONS):
        phi = s + dt * f.f(s) - target
        if np.all(np.abs(phi) <= _SCALAR_TOLERANCE * (1.0 + np.abs(target))):
            return s
        hi = np.where(phi > 0, s, hi)
        lo = np.where(phi <= 0, s, lo)
        slope = 1.0 + dt * f.f_prime(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = s - phi / slope
        inside = (slope > 0) & (newton > lo) & (newton < hi)
        s = np.where(inside, newton, 0.5 * (lo + hi))
        if np.all(hi - lo <= _SCALAR_TOLERANCE * (1.0 + np.abs(target))):
            return s
    return s


class ResolventSolver:
    """Solves (u - u_old)/dt + A u + f(u) = g for one implicit step."""

    def __init__(self, op: DiscreteOperator, f: NonlinearityModel, cfg: StepConfig) -> None:
        self._op = op
        self._f = f
        self._cfg = cfg

    def residual(self, u: np.ndarray, u_old: np.ndarray, dt: float) -> np.ndarray:
        return (u - u_old) / dt + self._op.apply(u) + self._f.f(u) - self._op.grid.g_nodes

    def _scale(self, u: np.ndarray, u_old: np.ndarray, dt: float) -> float:
        return float(
            np.linalg.norm(u_old) / dt
            + np.linalg.norm(self._op.grid.g_nodes)
            + np.linalg.norm(u) / dt
        )

    def _relative(self, u: np.ndarray, u_old: np.ndarray, dt: float) -> float:
        scale = self._scale(u, u_old, dt)
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.residual(u, u_old, dt))) / scale

    def _try_relative(self, u: np.ndarray, u_old: np.ndarray, dt: float) -> float:
        if not np.all(np.isfinite(u)):
            return float("inf")
        try:
            return self._relative(u, u_old, dt)
        except (NonlinearityOverflowError, NonFiniteFieldError):
            return float("inf")

    def _picard_candidate(self, w: np.ndarray, u_old: np.ndarray, dt: float) -> np.ndarray:
        slope = self._f.f_prime(w)
        matrix = (
            sp.identity(w.size, format="csr") / dt
            + self._op.lagged_matrix(w)
            + sp.diags(slope, format="csr")
        )
        rhs = u_old / dt + self._op.grid.g_nodes - self._f.f(w) + slope * w
        return np.asarray(spsolve(matrix.tocsc(), rhs), dtype=float)

    def _newton_direction(self, u: np.ndarray, u_old: np.ndarray, dt: float) -> np.ndarray:
        epsilon = self._op.epsilon_reg
        if epsilon == 0.0:
            gradient_scale = float(np.max(np.abs(u))) / self._op.grid.h if u.size else 0.0
            epsilon = self._cfg.newton_epsilon_scale * (gradient_scale if gradient_scale else 1.0)
        matrix = (
            sp.identity(u.size, format="csr") / dt
            + self._op.jacobian(u, epsilon)
            + sp.diags(self._f.f_prime(u), format="csr")
        )
        return np.asarray(spsolve(matrix.tocsc(), -self.residual(u, u_old, dt)), dtype=float)

    def _backtrack(
        self,
        u: np.ndarray,
        step: np.ndarray,
        current: float,
        u_old: np.ndarray,
        dt: float,
        first_factor: float,
    ) -> tuple[np.ndarray, float] | None:
        factor = first_factor
        for _ in range(_BACKTRACK_LIMIT + 1):
            trial = u + factor * step
            relative = self._try_relative(trial, u_old, dt)
            if relative < current:
                return trial, relative
            factor *= 0.5
        return None

    def solve(self, u_old: np.ndarray, dt: float) -> SolveResult:
        cfg = self._cfg
        u = solve_scalar_resolvent(self._f, dt, u_old + dt * self._op.grid.g_nodes)
        relative = self._relative(u, u_old, dt)

        picard = 0
        while relative > cfg.nonlinear_tol and picard < cfg.max_picard:
            if relative <= cfg.picard_switch_tol and cfg.max_newton > 0:
                break
            picard += 1
            candidate = self._picard_candidate(u, u_old, dt)
            accepted = self._backtrack(u, candidate - u, relative, u_old, dt, cfg.damping)
            if accepted is None:
                logger.debug("Picard stalled iteration=%s residual=%.3e", picard, relative)
                break
            u, relative = accepted

        newton = 0
        while relative > cfg.nonlinear_tol and newton < cfg.max_newton:
            newton += 1
            direction = self._newton_direction(u, u_old, dt)
            accepted = self._backtrack(u, direction, relative, u_old, dt, 1.0)
            if accepted is None:
                logger.debug("Newton stalled iteration=%s residual=%.3e", newton, relative)
                break
            u, relative = accepted

        if relative > cfg.nonlinear_tol:
            raise SolverStagnationError(
                f"resolvent solve stalled at relative residual {relative:.3e} "
                f"after picard={picard} newton={newton}"
            )
        return SolveResult(
            u=u, picard_iterations=picard, newton_iterations=newton, relative_residual=relative
        )
