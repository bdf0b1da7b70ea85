from __future__ import annotations

import logging
import math

from app.config import Settings
from app.errors import ConfigurationError, InsufficientDataError
from app.model.problem import Problem
from app.model.validators import (
    validate_absorption_floor,
    validate_antiderivative,
    validate_source_sign,
    validate_weight_integrability,
)
from app.numerics.grid import Grid
from app.schemas import GridSpec, RunSpec, ValidationReport, ValidationSummary

logger = logging.getLogger(__name__)

GRID_ADMISSIBILITY = "grid_admissibility"


def check_grid_admissibility(problem: Problem, spec: GridSpec) -> ValidationReport:
    try:
        grid = Grid.from_spec(problem, spec)
    except ConfigurationError as exc:
        return ValidationReport(condition=GRID_ADMISSIBILITY, passed=False, detail=str(exc))
    return ValidationReport(
        condition=GRID_ADMISSIBILITY,
        passed=True,
        value=float(grid.sigma_faces.min()) if grid.sigma_faces.size else None,
        detail=f"h={grid.h!r}, nodes per axis {grid.m_per_axis}",
    )


def run_validation(
    problem: Problem,
    grid_spec: GridSpec,
    run: RunSpec,
    settings: Settings,
) -> ValidationSummary:
    """Structural conditions on sigma, beta and f plus grid admissibility."""
    try:
        weight = validate_weight_integrability(
            problem.sigma,
            problem.p,
            problem.dim,
            run.probe_radius,
            refinements=settings.quadrature_refinements,
            base_cells=settings.quadrature_base_cells,
            divergence_factor=settings.divergence_factor,
        )
    except InsufficientDataError as exc:
        weight = ValidationReport(condition="weight_integrability", passed=False, detail=str(exc))

    reports = [
        weight,
        validate_absorption_floor(
            problem.beta,
            problem.spec.beta0,
            problem.spec.r0,
            run.sample_budget,
            r_max=grid_spec.R * math.sqrt(problem.dim),
        ),
        validate_source_sign(problem.f, problem.c_mono, run.sample_range, run.sample_budget),
        validate_antiderivative(problem.f, run.sample_range),
        check_grid_admissibility(problem, grid_spec),
    ]
    failed = [report.condition for report in reports if not report.passed]
    for name in failed:
        logger.warning("Structural condition failed condition=%s", name)
    return ValidationSummary(passed=not failed, reports=reports, failed_conditions=failed)
