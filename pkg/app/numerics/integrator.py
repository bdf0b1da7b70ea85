from __future__ import annotations

import dataclasses
import logging
from collections.abc import Callable, Sequence

import numpy as np

from app.errors import (
    ConfigurationError,
    IntegratorFailure,
    NonFiniteFieldError,
    NonlinearityOverflowError,
    SolverStagnationError,
    StabilityViolationError,
)
from app.model.base import NonlinearityModel
from app.numerics.grid import State
from app.numerics.ledger import EnergyLedger, LedgerRow, LedgerSink, ledger_row
from app.numerics.operator import DiscreteOperator, full_rhs
from app.numerics.solver import ResolventSolver
from app.schemas import Scheme, StepConfig

logger = logging.getLogger(__name__)

_SNAP_FRACTION = 1e-9
_RETRYABLE = (SolverStagnationError, NonlinearityOverflowError, NonFiniteFieldError)

StepCallback = Callable[[State, int], None]


def _failure(state: State, dt: float, cfg: StepConfig, exc: Exception) -> IntegratorFailure:
    return IntegratorFailure(
        f"step rejected after {cfg.max_halvings} dt halvings at t={state.t!r}: {exc}",
        state=state,
        diagnostics={
            "t": state.t,
            "dt_requested": cfg.dt,
            "dt_last": dt,
            "halvings": cfg.max_halvings,
            "reason": f"{type(exc).__name__}: {exc}",
        },
    )


def step_implicit_many(
    states: Sequence[State],
    op: DiscreteOperator,
    f: NonlinearityModel,
    cfg: StepConfig,
) -> list[tuple[State, LedgerRow]]:
    """Backward Euler for several states with one shared dt; a rejection halves dt for all."""
    if cfg.scheme != Scheme.implicit:
        raise ConfigurationError("step_implicit requires scheme = implicit")
    solver = ResolventSolver(op, f, cfg)
    dt = cfg.dt
    last_error: Exception | None = None
    for attempt in range(cfg.max_halvings + 1):
        try:
            solved = [solver.solve(state.u, dt).u for state in states]
        except _RETRYABLE as exc:
            last_error = exc
            logger.warning(
                "Implicit step rejected t=%s dt=%s attempt=%s reason=%s",
                states[0].t,
                dt,
                attempt,
                exc,
            )
            dt *= 0.5
            continue
        results = []
        for state, u_next in zip(states, solved, strict=True):
            t_next = state.t + dt
            row = ledger_row(op, f, state.u, u_next, t_next, dt)
            results.append((State(u=u_next, t=t_next), row))
        return results
    assert last_error is not None
    raise _failure(states[0], dt * 2.0, cfg, last_error)


def step_implicit(
    state: State, op: DiscreteOperator, f: NonlinearityModel, cfg: StepConfig
) -> tuple[State, LedgerRow]:
    return step_implicit_many([state], op, f, cfg)[0]


def explicit_dt_limit(
    state: State, op: DiscreteOperator, f: NonlinearityModel, cfg: StepConfig
) -> float:
    stiffness = op.stiffness_bound(state.u)
    if state.u.size:
        stiffness += max(float(np.max(f.f_prime(state.u))), 0.0)
    if stiffness <= 0.0:
        return float("inf")
    return cfg.explicit_safety * 2.0 / stiffness


def step_explicit(
    state: State, op: DiscreteOperator, f: NonlinearityModel, cfg: StepConfig
) -> tuple[State, LedgerRow]:
    limit = explicit_dt_limit(state, op, f, cfg)
    if cfg.dt > limit:
        raise StabilityViolationError(
            f"explicit dt={cfg.dt!r} exceeds stability limit {limit!r} at t={state.t!r}",
            state=state,
            limit=limit,
        )
    u_next = state.u + cfg.dt * full_rhs(op, state.u, f)
    if not np.all(np.isfinite(u_next)):
        raise NonFiniteFieldError(f"explicit step produced NaN or Inf at t={state.t!r}")
    t_next = state.t + cfg.dt
    return State(u=u_next, t=t_next), ledger_row(op, f, state.u, u_next, t_next, cfg.dt)


def step_synchronized(
    states: Sequence[State],
    op: DiscreteOperator,
    f: NonlinearityModel,
    cfg: StepConfig,
) -> list[tuple[State, LedgerRow]]:
    if cfg.scheme == Scheme.implicit:
        return step_implicit_many(states, op, f, cfg)
    return [step_explicit(state, op, f, cfg) for state in states]


def _next_dt(remaining: float, dt: float) -> float:
    if remaining >= dt * (1.0 - _SNAP_FRACTION):
        return dt
    return remaining


def _finished(current: float, target: float, dt: float) -> bool:
    return target - current <= _SNAP_FRACTION * dt


def run_many_to_time(
    states: Sequence[State],
    T_final: float,
    cfg: StepConfig,
    op: DiscreteOperator,
    f: NonlinearityModel,
    sinks: Sequence[LedgerSink | None] | None = None,
    *,
    on_step: Callable[[list[State], int], None] | None = None,
) -> tuple[list[State], list[EnergyLedger]]:
    """Synchronized stepping of several states to T_final with identical dt sequences."""
    if not states:
        return [], []
    start = states[0].t
    if any(state.t != start for state in states):
        raise ConfigurationError("synchronized states must share their start time")
    if T_final < start - _SNAP_FRACTION * cfg.dt:
        raise ValueError(f"T_final={T_final!r} is before the current time {start!r}")
    sinks = list(sinks) if sinks is not None else [None] * len(states)
    ledgers = [EnergyLedger(rows=[], start_time=start) for _ in states]
    current = list(states)
    steps = 0
    while not _finished(current[0].t, T_final, cfg.dt):
        dt = _next_dt(T_final - current[0].t, cfg.dt)
        step_cfg = cfg if dt == cfg.dt else cfg.model_copy(update={"dt": dt})
        advanced = step_synchronized(current, op, f, step_cfg)
        current = []
        for (state, row), ledger, sink in zip(advanced, ledgers, sinks, strict=True):
            if _finished(state.t, T_final, cfg.dt):
                state = State(u=state.u, t=T_final)
                row = dataclasses.replace(row, t=T_final)
            current.append(state)
            ledger.append(row)
            if sink is not None:
                sink.write(row)
        steps += 1
        if on_step is not None:
            on_step(current, steps)
    return current, ledgers


def run_to_time(
    state: State,
    T_final: float,
    cfg: StepConfig,
    op: DiscreteOperator,
    f: NonlinearityModel,
    sink: LedgerSink | None = None,
    *,
    on_step: StepCallback | None = None,
) -> tuple[State, EnergyLedger]:
    def _forward(current: list[State], steps: int) -> None:
        if on_step is not None:
            on_step(current[0], steps)

    final, ledgers = run_many_to_time([state], T_final, cfg, op, f, [sink], on_step=_forward)
    logger.debug("Run finished t=%s steps=%s", final[0].t, len(ledgers[0].rows))
    return final[0], ledgers[0]
