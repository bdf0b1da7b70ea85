from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app.model.base import CoefficientProfile


@dataclass(frozen=True, slots=True)
class ConstantProfile(CoefficientProfile):
    value: float = 1.0
    kind = "constant"

    def radial(self, r: np.ndarray) -> np.ndarray:
        return np.full(np.shape(r), self.value, dtype=float)


@dataclass(frozen=True, slots=True)
class PowerLawProfile(CoefficientProfile):
    """amplitude * |x|^alpha + offset, optionally capped from above."""

    alpha: float
    amplitude: float = 1.0
    offset: float = 0.0
    cap: float | None = None
    kind = "power_law"

    def radial(self, r: np.ndarray) -> np.ndarray:
        radius = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = self.amplitude * np.power(radius, self.alpha) + self.offset
        if self.cap is not None:
            values = np.minimum(values, self.cap)
        return values

    @property
    def singular_at_origin(self) -> bool:
        return self.alpha < 0


@dataclass(frozen=True, slots=True)
class TwoPowerProfile(CoefficientProfile):
    alpha: float
    gamma: float
    amplitude: float = 1.0
    kind = "two_power"

    def radial(self, r: np.ndarray) -> np.ndarray:
        radius = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.amplitude * (np.power(radius, self.alpha) + np.power(radius, self.gamma))

    @property
    def singular_at_origin(self) -> bool:
        return min(self.alpha, self.gamma) < 0


@dataclass(frozen=True, slots=True)
class RadialTableProfile(CoefficientProfile):
    """Piecewise-linear interpolation in |x|, constant beyond the table ends."""

    radii: tuple[float, ...]
    values: tuple[float, ...]
    kind = "radial_table"

    def radial(self, r: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(r, dtype=float), self.radii, self.values)

    def samples_within(self, radius: float) -> int:
        return sum(1 for item in self.radii if item <= radius)


@dataclass(frozen=True, slots=True)
class GaussianBumpProfile(CoefficientProfile):
    amplitude: float = 1.0
    width: float = 1.0
    baseline: float = 0.0
    center_radius: float = 0.0
    kind = "gaussian_bump"

    def radial(self, r: np.ndarray) -> np.ndarray:
        shifted = (np.asarray(r, dtype=float) - self.center_radius) / self.width
        return self.baseline + self.amplitude * np.exp(-shifted * shifted)


@dataclass(frozen=True, slots=True)
class ExponentialProfile(CoefficientProfile):
    amplitude: float = 1.0
    rate: float = 1.0
    offset: float = 0.0
    kind = "exponential"

    def radial(self, r: np.ndarray) -> np.ndarray:
        return self.amplitude * np.exp(-self.rate * np.asarray(r, dtype=float)) + self.offset


@dataclass(frozen=True, slots=True)
class FlatExponentialProfile(CoefficientProfile):
    """amplitude * exp(-1/|x|^2) outside core_radius, zero inside it."""

    amplitude: float = 1.0
    core_radius: float = 0.0
    kind = "flat_exponential"

    def radial(self, r: np.ndarray) -> np.ndarray:
        radius = np.asarray(r, dtype=float)
        active = (radius > 0) & (radius >= self.core_radius)
        safe = np.where(active, radius, 1.0)
        return np.where(active, self.amplitude * np.exp(-1.0 / (safe * safe)), 0.0)
