from __future__ import annotations

from typing import Any


class ConfigurationError(ValueError):
    """Raised when an experiment is set up inconsistently."""


class InsufficientDataError(ValueError):
    """Raised when a tabulated profile is too sparse to probe."""


class DegenerateInputError(ValueError):
    """Raised when inputs make a diagnostic ratio undefined."""


class NonlinearityOverflowError(ArithmeticError):
    """Raised when the source term is evaluated beyond its safe range."""


class NonFiniteFieldError(ArithmeticError):
    """Raised when a field or operator output contains NaN or Inf."""


class StabilityViolationError(RuntimeError):
    """Raised when an explicit step would violate its stability bound."""

    def __init__(self, message: str, *, state: Any = None, limit: float | None = None) -> None:
        super().__init__(message)
        self.state = state
        self.limit = limit


class TrajectoryTimeoutError(TimeoutError):
    """Raised when an ensemble member does not reach its horizon in time."""

    def __init__(self, message: str, *, index: int, state: Any) -> None:
        super().__init__(message)
        self.index = index
        self.state = state


class SolverStagnationError(RuntimeError):
    """Raised when a nonlinear resolvent solve does not converge."""


class IntegratorFailure(RuntimeError):
    """Raised when a step is still rejected after the allowed dt halvings."""

    def __init__(self, message: str, *, state: Any, diagnostics: dict[str, Any]) -> None:
        super().__init__(message)
        self.state = state
        self.diagnostics = diagnostics
