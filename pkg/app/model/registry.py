from __future__ import annotations

from collections.abc import Callable
from typing import Any

from app.model.base import CoefficientProfile, NonlinearityModel
from app.model.nonlinearities import (
    CubicMinusLinearNonlinearity,
    ExpGrowthNonlinearity,
    OddPowerNonlinearity,
    ZeroNonlinearity,
)
from app.model.profiles import (
    ConstantProfile,
    ExponentialProfile,
    FlatExponentialProfile,
    GaussianBumpProfile,
    PowerLawProfile,
    RadialTableProfile,
    TwoPowerProfile,
)


def _table(spec: Any) -> RadialTableProfile:
    return RadialTableProfile(radii=tuple(spec.radii), values=tuple(spec.values))


class ModelRegistry:
    def __init__(self) -> None:
        self._profile_map: dict[str, Callable[[Any], CoefficientProfile]] = {
            "constant": lambda spec: ConstantProfile(value=spec.value),
            "power_law": lambda spec: PowerLawProfile(
                alpha=spec.alpha, amplitude=spec.amplitude, offset=spec.offset, cap=spec.cap
            ),
            "two_power": lambda spec: TwoPowerProfile(
                alpha=spec.alpha, gamma=spec.gamma, amplitude=spec.amplitude
            ),
            "radial_table": _table,
            "gaussian_bump": lambda spec: GaussianBumpProfile(
                amplitude=spec.amplitude,
                width=spec.width,
                baseline=spec.baseline,
                center_radius=spec.center_radius,
            ),
            "exponential": lambda spec: ExponentialProfile(
                amplitude=spec.amplitude, rate=spec.rate, offset=spec.offset
            ),
            "flat_exponential": lambda spec: FlatExponentialProfile(
                amplitude=spec.amplitude, core_radius=spec.core_radius
            ),
        }
        self._nonlinearity_map: dict[str, Callable[[Any], NonlinearityModel]] = {
            "zero": lambda spec: ZeroNonlinearity(),
            "odd_power": lambda spec: OddPowerNonlinearity(q=spec.q),
            "cubic_minus_linear": lambda spec: CubicMinusLinearNonlinearity(a=spec.a, b=spec.b),
            "exp_growth": lambda spec: ExpGrowthNonlinearity(),
        }

    def build_profile(self, spec: Any) -> CoefficientProfile:
        factory = self._profile_map.get(spec.kind)
        if factory is None:
            raise ValueError(
                f"Unknown coefficient profile kind: {spec.kind}; "
                f"available: {', '.join(self.available_profiles)}"
            )
        return factory(spec)

    def build_nonlinearity(self, spec: Any) -> NonlinearityModel:
        factory = self._nonlinearity_map.get(spec.kind)
        if factory is None:
            raise ValueError(
                f"Unknown nonlinearity kind: {spec.kind}; "
                f"available: {', '.join(self.available_nonlinearities)}"
            )
        return factory(spec)

    @property
    def available_profiles(self) -> list[str]:
        return sorted(self._profile_map.keys())

    @property
    def available_nonlinearities(self) -> list[str]:
        return sorted(self._nonlinearity_map.keys())
