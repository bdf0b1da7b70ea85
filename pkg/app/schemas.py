from __future__ import annotations

from enum import StrEnum
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ExperimentKind(StrEnum):
    simulate = "simulate"
    validate = "validate"
    contract = "contract"
    absorb = "absorb"
    compact = "compact"
    attractor = "attractor"


class Scheme(StrEnum):
    implicit = "implicit"
    explicit = "explicit"


class ExperimentStatus(StrEnum):
    queued = "queued"
    running = "running"
    completed = "completed"
    failed = "failed"


class InitialKind(StrEnum):
    zero = "zero"
    gaussian_bumps = "gaussian_bumps"
    sine_mode = "sine_mode"
    snapshot = "snapshot"


# Coefficient profiles. All shapes are radial: value depends on |x| only.


class ConstantProfileSpec(_Strict):
    kind: Literal["constant"] = "constant"
    value: float = 1.0


class PowerLawProfileSpec(_Strict):
    kind: Literal["power_law"] = "power_law"
    alpha: float
    amplitude: float = 1.0
    offset: float = 0.0
    cap: float | None = None


class TwoPowerProfileSpec(_Strict):
    kind: Literal["two_power"] = "two_power"
    alpha: float
    gamma: float
    amplitude: float = 1.0


class RadialTableProfileSpec(_Strict):
    kind: Literal["radial_table"] = "radial_table"
    radii: list[float]
    values: list[float]

    @model_validator(mode="after")
    def _validate_table(self) -> RadialTableProfileSpec:
        if len(self.radii) != len(self.values):
            raise ValueError("radii and values must have the same length")
        if len(self.radii) < 2:
            raise ValueError("radial_table needs at least two samples")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:], strict=False)):
            raise ValueError("radii must be strictly increasing")
        if self.radii[0] < 0:
            raise ValueError("radii must be nonnegative")
        return self


class GaussianBumpProfileSpec(_Strict):
    kind: Literal["gaussian_bump"] = "gaussian_bump"
    amplitude: float = 1.0
    width: float = Field(default=1.0, gt=0)
    baseline: float = 0.0
    center_radius: float = Field(default=0.0, ge=0)


class ExponentialProfileSpec(_Strict):
    kind: Literal["exponential"] = "exponential"
    amplitude: float = 1.0
    rate: float = 1.0
    offset: float = 0.0


class FlatExponentialProfileSpec(_Strict):
    kind: Literal["flat_exponential"] = "flat_exponential"
    amplitude: float = 1.0
    core_radius: float = Field(default=0.0, ge=0)


CoefficientSpec = Annotated[
    ConstantProfileSpec
    | PowerLawProfileSpec
    | TwoPowerProfileSpec
    | RadialTableProfileSpec
    | GaussianBumpProfileSpec
    | ExponentialProfileSpec
    | FlatExponentialProfileSpec,
    Field(discriminator="kind"),
]


class ZeroNonlinearitySpec(_Strict):
    kind: Literal["zero"] = "zero"


class OddPowerSpec(_Strict):
    kind: Literal["odd_power"] = "odd_power"
    q: float = Field(default=3.0, ge=1)


class CubicMinusLinearSpec(_Strict):
    kind: Literal["cubic_minus_linear"] = "cubic_minus_linear"
    a: float = 1.0
    b: float = 1.0


class ExpGrowthSpec(_Strict):
    kind: Literal["exp_growth"] = "exp_growth"


NonlinearitySpec = Annotated[
    ZeroNonlinearitySpec | OddPowerSpec | CubicMinusLinearSpec | ExpGrowthSpec,
    Field(discriminator="kind"),
]


class ProblemSpec(_Strict):
    p: float = Field(default=2.0, ge=2)
    dim: int = Field(default=1, ge=1, le=2)
    sigma: CoefficientSpec = Field(default_factory=ConstantProfileSpec)
    beta: CoefficientSpec = Field(default_factory=ConstantProfileSpec)
    g: CoefficientSpec = Field(default_factory=lambda: ConstantProfileSpec(value=0.0))
    f: NonlinearitySpec = Field(default_factory=ZeroNonlinearitySpec)
    beta0: float = Field(default=1.0, gt=0)
    r0: float = Field(default=1.0, gt=0)
    c_mono: float = Field(default=1.0, gt=0)


class GridSpec(_Strict):
    R: float = Field(default=8.0, gt=0)
    m_per_axis: int = Field(default=65, ge=3)
    normal_only: bool = False


class StepConfig(_Strict):
    dt: float = Field(default=0.01, gt=0)
    scheme: Scheme = Scheme.implicit
    nonlinear_tol: float = Field(default=1e-10, gt=0, le=1e-4)
    max_picard: int = Field(default=60, ge=1)
    max_newton: int = Field(default=25, ge=0)
    damping: float = Field(default=0.7, gt=0, le=1)
    explicit_safety: float = Field(default=0.9, gt=0, lt=1)
    picard_switch_tol: float = Field(default=1e-4, gt=0)
    newton_epsilon_scale: float = Field(default=1e-8, ge=0)
    max_halvings: int = Field(default=10, ge=0)


class IOSpec(_Strict):
    output_dir: str | None = None
    snapshot_every: int = Field(default=0, ge=0)
    ledger_path: str = "ledger.csv"


class InitialSpec(_Strict):
    kind: InitialKind = InitialKind.gaussian_bumps
    count: int = Field(default=1, ge=1)
    l2_min: float = Field(default=1.0, ge=0)
    l2_max: float | None = None
    relative_to_rho: bool = False
    identical: bool = False
    max_bumps: int = Field(default=5, ge=1)
    mode: int = Field(default=1, ge=1)
    snapshot_path: str | None = None
    partner_distance: float = Field(default=0.5, gt=0)

    @model_validator(mode="after")
    def _validate_range(self) -> InitialSpec:
        if self.l2_max is not None and self.l2_max < self.l2_min:
            raise ValueError("l2_max must be >= l2_min")
        if self.kind == InitialKind.snapshot and not self.snapshot_path:
            raise ValueError("snapshot_path is required when kind is snapshot")
        return self


class RunSpec(_Strict):
    T_final: float = Field(default=1.0, gt=0)
    checkpoints: int = Field(default=16, ge=1)
    T_burn: float = Field(default=1.0, ge=0)
    n_snapshots: int = Field(default=4, ge=1)
    snapshot_interval: float = Field(default=0.5, gt=0)
    compact_eps: float | None = Field(default=None, gt=0)
    probe_radius: float = Field(default=1.0, gt=0)
    sample_budget: int = Field(default=2001, ge=1)
    sample_range: float = Field(default=10.0, gt=0)
    embedding_trials: int = Field(default=200, ge=1)
    optimizer_steps: int = Field(default=50, ge=0)


class RunConfig(_Strict):
    experiment: ExperimentKind
    seed: int = Field(default=0, ge=0, lt=2**64)
    problem: ProblemSpec = Field(default_factory=ProblemSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    stepping: StepConfig = Field(default_factory=StepConfig)
    io: IOSpec = Field(default_factory=IOSpec)
    initial: InitialSpec = Field(default_factory=InitialSpec)
    run: RunSpec = Field(default_factory=RunSpec)
    strict_paper: bool = False
    allow_small_domain: bool = False

    @field_validator("experiment", mode="before")
    @classmethod
    def _normalize_experiment(cls, value: str) -> str:
        return value.strip().lower() if isinstance(value, str) else value

    @model_validator(mode="after")
    def _validate_setup(self) -> RunConfig:
        if self.strict_paper and self.problem.dim < 2:
            raise ValueError("strict_paper requires dim >= 2")
        if not self.allow_small_domain and self.grid.R < 4 * self.problem.r0:
            raise ValueError("grid.R must be at least 4 * r0 (set allow_small_domain to override)")
        if (
            self.stepping.scheme == Scheme.implicit
            and self.stepping.dt * self.problem.c_mono >= 1
        ):
            raise ValueError("implicit stepping requires dt * c_mono < 1")
        return self


# Reports


class ValidationReport(BaseModel):
    condition: str
    passed: bool
    value: float | None = None
    worst_margin: float | None = None
    detail: str = ""
    refinements: list[float] = Field(default_factory=list)


class ValidationSummary(BaseModel):
    passed: bool
    reports: list[ValidationReport]
    failed_conditions: list[str] = Field(default_factory=list)


class ContractionReport(BaseModel):
    passed: bool
    c: float
    initial_distance: float
    times: list[float]
    ratios: list[float]
    max_ratio: float
    strict_ratios: list[float]
    max_strict_ratio: float


class AbsorbEntry(BaseModel):
    index: int
    initial_l2: float
    entry_time: float | None = None
    exited_after_entry: bool = False
    decay_rate: float | None = None


class AbsorbReport(BaseModel):
    passed: bool
    rho_sq: float
    c1_h: float
    c2_h: float
    embedding_constant: float
    c1_emp: float | None = None
    horizon: float
    entries: list[AbsorbEntry]


class EnvelopeReport(BaseModel):
    eps: float
    p: float
    c1: float
    c5: float
    fit_times: list[float]
    test_times: list[float]
    envelope_values: list[float]
    late_min_diameter_sq: float | None = None
    late_envelope: float | None = None
    passed: bool
    heuristic: bool = True


class CompactReport(BaseModel):
    label: str = "diameter-shrinkage diagnostic (not a compactness proof)"
    passed: bool
    shrinkage_passed: bool
    times: list[float]
    diameters: list[float]
    distance_matrices: list[list[list[float]]]
    envelope: EnvelopeReport | None = None


class AttractorReport(BaseModel):
    passed: bool
    rho_sq: float
    snapshot_times: list[float]
    snapshot_l2: list[list[float]]
    spread: float
    inside_absorbing: bool


class RunReport(BaseModel):
    experiment: ExperimentKind
    spec_hash: str
    passed: bool
    rho_sq: float | None = None
    c1_h: float | None = None
    c1_emp: float | None = None
    entries: list[AbsorbEntry] = Field(default_factory=list)
    contraction: list[ContractionReport] = Field(default_factory=list)
    diameters: list[list[float]] = Field(default_factory=list)
    envelope: EnvelopeReport | None = None
    validation: ValidationSummary | None = None
    attractor: AttractorReport | None = None
    final_l2: float | None = None
    notes: list[str] = Field(default_factory=list)


class ConvergenceReport(BaseModel):
    spatial_steps: list[float]
    spatial_differences: list[float]
    spatial_order: float | None = None
    time_steps: list[float]
    temporal_differences: list[float]
    temporal_order: float | None = None
