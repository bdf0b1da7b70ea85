from __future__ import annotations

import tomllib
from dataclasses import dataclass

import tomli_w

from app.model.base import CoefficientProfile, NonlinearityModel
from app.model.registry import ModelRegistry
from app.schemas import ProblemSpec


@dataclass(frozen=True, slots=True)
class Problem:
    """Runtime view of a ProblemSpec with evaluable profiles."""

    spec: ProblemSpec
    sigma: CoefficientProfile
    beta: CoefficientProfile
    g: CoefficientProfile
    f: NonlinearityModel

    @property
    def p(self) -> float:
        return self.spec.p

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def c_mono(self) -> float:
        return self.spec.c_mono

    @classmethod
    def from_spec(cls, spec: ProblemSpec, registry: ModelRegistry | None = None) -> Problem:
        registry = registry or ModelRegistry()
        return cls(
            spec=spec,
            sigma=registry.build_profile(spec.sigma),
            beta=registry.build_profile(spec.beta),
            g=registry.build_profile(spec.g),
            f=registry.build_nonlinearity(spec.f),
        )


def problem_spec_to_toml(spec: ProblemSpec) -> str:
    payload = spec.model_dump(mode="json", exclude_none=True)
    return tomli_w.dumps(payload)


def problem_spec_from_toml(text: str) -> ProblemSpec:
    return ProblemSpec.model_validate(tomllib.loads(text))
