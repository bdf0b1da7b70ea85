from __future__ import annotations

import logging
import math

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

from app.errors import InsufficientDataError
from app.model.base import CoefficientProfile, NonlinearityModel
from app.model.profiles import RadialTableProfile
from app.schemas import ValidationReport

logger = logging.getLogger(__name__)

WEIGHT_INTEGRABILITY = "weight_integrability"
ABSORPTION_FLOOR = "absorption_floor"
SOURCE_SIGN = "source_sign"
ANTIDERIVATIVE = "antiderivative"

_MIN_TABLE_SAMPLES = 4
_STALL_TOLERANCE = 1e-12


def weight_exponent(p: float, n: int) -> float:
    """Exponent s in the local integrability requirement sigma^(-s) in L^1_loc."""
    denominator = n * (p - 2.0) + 2.0 * p
    # The Hoelder form of the same exponent uses p(n+2) - 2n; both denominators coincide.
    assert math.isclose(denominator, p * (n + 2.0) - 2.0 * n, rel_tol=1e-12, abs_tol=1e-12)
    return 2.0 * n / denominator


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2.0) / float(gamma(n / 2.0))


def tilde_f(
    f: NonlinearityModel, c_mono: float, s: np.ndarray | float
) -> np.ndarray | float:
    values = f.f(s) + c_mono * np.asarray(s, dtype=float)
    return float(values) if np.ndim(values) == 0 else values


def radial_weight_integrals(
    sigma: CoefficientProfile,
    p: float,
    n: int,
    probe_radius: float,
    *,
    refinements: int = 5,
    base_cells: int = 16,
) -> list[float]:
    exponent = weight_exponent(p, n)
    area = sphere_area(n)
    estimates: list[float] = []
    for level in range(refinements + 1):
        cells = base_cells * 2**level
        h = probe_radius / cells
        midpoints = (np.arange(cells) + 0.5) * h
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            weights = np.power(sigma.radial(midpoints), -exponent)
            integrand = weights * np.power(midpoints, n - 1)
            estimates.append(float(area * h * np.sum(integrand)))
    return estimates


def _classify_refinements(estimates: list[float], divergence_factor: float) -> tuple[bool, str]:
    if not all(math.isfinite(item) for item in estimates):
        return False, "non-finite quadrature estimate"
    last, previous = estimates[-1], estimates[-2]
    if previous > 0 and last > divergence_factor * previous:
        return False, f"last refinement grew by more than {divergence_factor:g}x"
    last_step = abs(last - previous)
    previous_step = abs(previous - estimates[-3])
    if last_step <= _STALL_TOLERANCE * max(abs(last), 1.0):
        return True, "refinement converged"
    if previous_step == 0.0 or last_step / previous_step >= 1.0:
        return False, "refinement increments do not contract"
    return True, f"increment ratio {last_step / previous_step:.4f}"


def validate_weight_integrability(
    sigma: CoefficientProfile,
    p: float,
    n: int,
    probe_radius: float,
    *,
    refinements: int = 5,
    base_cells: int = 16,
    divergence_factor: float = 10.0,
) -> ValidationReport:
    if probe_radius <= 0:
        raise ValueError("probe_radius must be positive")
    if refinements < 2:
        raise ValueError("at least two refinements are needed to classify convergence")
    if (
        isinstance(sigma, RadialTableProfile)
        and sigma.samples_within(probe_radius) < _MIN_TABLE_SAMPLES
    ):
        raise InsufficientDataError(
            f"radial_table has fewer than {_MIN_TABLE_SAMPLES} samples within "
            f"radius {probe_radius:g}"
        )

    estimates = radial_weight_integrals(
        sigma, p, n, probe_radius, refinements=refinements, base_cells=base_cells
    )
    passed, detail = _classify_refinements(estimates, divergence_factor)
    value = estimates[-1] if math.isfinite(estimates[-1]) else None
    logger.debug("Weight integrability passed=%s detail=%s", passed, detail)
    return ValidationReport(
        condition=WEIGHT_INTEGRABILITY,
        passed=passed,
        value=value,
        detail=detail,
        refinements=[item if math.isfinite(item) else float("inf") for item in estimates],
    )


def validate_absorption_floor(
    beta: CoefficientProfile,
    beta0: float,
    r0: float,
    sample_budget: int,
    *,
    r_max: float | None = None,
) -> ValidationReport:
    if sample_budget < 1:
        raise ValueError("sample_budget must be >= 1")
    outer_max = r_max if r_max is not None else 4.0 * r0
    outer = beta.radial(np.linspace(r0, max(outer_max, r0), sample_budget))
    inner = beta.radial(np.linspace(0.0, r0, sample_budget))

    if not (np.all(np.isfinite(outer)) and np.all(np.isfinite(inner))):
        return ValidationReport(
            condition=ABSORPTION_FLOOR,
            passed=False,
            detail="beta is not essentially bounded on the sampled region",
        )
    floor = float(np.min(outer))
    margin = floor - beta0
    nonnegative = bool(np.min(inner) >= 0.0)
    passed = margin >= 0.0 and nonnegative
    detail = f"min beta on [{r0:g}, {outer_max:g}] is {floor:.6g}"
    if not nonnegative:
        detail += "; beta takes negative values inside r0"
    return ValidationReport(
        condition=ABSORPTION_FLOOR,
        passed=passed,
        value=floor,
        worst_margin=margin,
        detail=detail,
    )


def validate_source_sign(
    f: NonlinearityModel,
    c_mono: float,
    sample_range: float,
    sample_budget: int,
) -> ValidationReport:
    if sample_range <= 0:
        raise ValueError("sample_range must be positive")
    bound = min(sample_range, f.safe_bound)
    samples = np.unique(np.append(np.linspace(-bound, bound, max(sample_budget, 2)), 0.0))
    sign_margin = float(np.min(f.f(samples) * samples))
    slope_margin = float(np.min(f.f_prime(samples) + c_mono))
    passed = sign_margin >= 0.0 and slope_margin > 0.0
    detail = (
        f"min f(s)s = {sign_margin:.6g}, min f'(s)+c = {slope_margin:.6g} "
        f"on [-{bound:g}, {bound:g}]"
    )
    required = f.derived_c_mono
    if required is not None and c_mono < required:
        detail += f"; c_mono={c_mono:g} is below the {f.kind} slope bound {required:g}"
    return ValidationReport(
        condition=SOURCE_SIGN,
        passed=passed,
        value=slope_margin,
        worst_margin=sign_margin,
        detail=detail,
    )


def validate_antiderivative(
    f: NonlinearityModel,
    sample_range: float,
    sample_budget: int = 41,
    *,
    tolerance: float = 1e-8,
) -> ValidationReport:
    bound = min(sample_range, f.safe_bound, 6.0)
    worst = 0.0
    for point in np.linspace(-bound, bound, max(sample_budget, 2)):
        reference, _ = quad(
            lambda s: float(f.f(s)), 0.0, float(point), epsabs=1e-14, epsrel=1e-12, limit=200
        )
        closed = float(f.F(point))
        worst = max(worst, abs(closed - reference) / (1.0 + abs(closed)))
    return ValidationReport(
        condition=ANTIDERIVATIVE,
        passed=worst <= tolerance,
        value=worst,
        detail=f"max relative deviation of F from quadrature {worst:.3g}",
    )
