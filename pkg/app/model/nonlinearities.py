from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app.model.base import NonlinearityModel


@dataclass(frozen=True, slots=True)
class ZeroNonlinearity(NonlinearityModel):
    kind = "zero"

    def _f(self, s: np.ndarray) -> np.ndarray:
        return np.zeros_like(s)

    def _f_prime(self, s: np.ndarray) -> np.ndarray:
        return np.zeros_like(s)

    def _antiderivative(self, s: np.ndarray) -> np.ndarray:
        return np.zeros_like(s)


@dataclass(frozen=True, slots=True)
class OddPowerNonlinearity(NonlinearityModel):
    """f(s) = |s|^(q-1) s."""

    q: float = 3.0
    kind = "odd_power"

    @property
    def safe_bound(self) -> float:  # type: ignore[override]
        return 10.0 ** (300.0 / self.q)

    def _f(self, s: np.ndarray) -> np.ndarray:
        return np.sign(s) * np.power(np.abs(s), self.q)

    def _f_prime(self, s: np.ndarray) -> np.ndarray:
        if self.q == 1.0:
            return np.ones_like(s)
        return self.q * np.power(np.abs(s), self.q - 1.0)

    def _antiderivative(self, s: np.ndarray) -> np.ndarray:
        return np.power(np.abs(s), self.q + 1.0) / (self.q + 1.0)


@dataclass(frozen=True, slots=True)
class CubicMinusLinearNonlinearity(NonlinearityModel):
    """f(s) = a s^3 - b s; violates f(s)s >= 0 near zero whenever b > 0."""

    a: float = 1.0
    b: float = 1.0
    kind = "cubic_minus_linear"
    safe_bound = 1e100

    @property
    def derived_c_mono(self) -> float | None:
        return self.b

    def _f(self, s: np.ndarray) -> np.ndarray:
        return self.a * s**3 - self.b * s

    def _f_prime(self, s: np.ndarray) -> np.ndarray:
        return 3.0 * self.a * s**2 - self.b

    def _antiderivative(self, s: np.ndarray) -> np.ndarray:
        return 0.25 * self.a * s**4 - 0.5 * self.b * s**2


@dataclass(frozen=True, slots=True)
class ExpGrowthNonlinearity(NonlinearityModel):
    """f(s) = s exp(s^2): no polynomial upper bound."""

    kind = "exp_growth"
    safe_bound = 26.0

    def _f(self, s: np.ndarray) -> np.ndarray:
        return s * np.exp(s * s)

    def _f_prime(self, s: np.ndarray) -> np.ndarray:
        return np.exp(s * s) * (1.0 + 2.0 * s * s)

    def _antiderivative(self, s: np.ndarray) -> np.ndarray:
        return 0.5 * np.expm1(s * s)
