from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from app.errors import NonFiniteFieldError
from app.model.base import NonlinearityModel
from app.numerics.grid import Grid
from app.numerics.norms import grad_p_energy

_IDENTITY_TOLERANCE = 1e-10


@dataclass(frozen=True, slots=True)
class EnergyTerms:
    grad_p_energy: float
    beta_energy: float
    pairing: float


class DiscreteOperator:
    """A u = -div(sigma |grad u|^(p-2) grad u) + beta u on the interior nodes.

    A is the exact gradient of the discrete energy
    (1/p) sum sigma |grad u|^p + (1/2) sum beta u^2, scaled by the node volume,
    so the h^n-weighted pairing <A u, u> reproduces both integrals exactly.
    """

    def __init__(self, grid: Grid, p: float, epsilon_reg: float = 0.0) -> None:
        if p < 2:
            raise ValueError("p must be >= 2")
        if epsilon_reg < 0:
            raise ValueError("epsilon_reg must be >= 0")
        self.grid = grid
        self.p = float(p)
        self.epsilon_reg = float(epsilon_reg)
        self._beta = sp.diags(grid.beta_nodes, format="csr")

    def with_grid(self, grid: Grid) -> DiscreteOperator:
        return DiscreteOperator(grid, self.p, self.epsilon_reg)

    def _coefficients(
        self, field: np.ndarray
    ) -> list[tuple[np.ndarray, np.ndarray | None, np.ndarray]]:
        # field is one column of nodal values or a (size, k) block of columns
        terms = []
        for family in self.grid.faces:
            normal = family.normal @ field
            tangential = None if family.tangential is None else family.tangential @ field
            squared = normal * normal
            if tangential is not None:
                squared = squared + tangential * tangential
            sigma = family.sigma if field.ndim == 1 else family.sigma[:, None]
            coefficient = sigma * np.power(np.sqrt(squared), self.p - 2.0)
            terms.append((normal, tangential, coefficient))
        return terms

    def _apply_block(self, field: np.ndarray) -> np.ndarray:
        beta = self.grid.beta_nodes if field.ndim == 1 else self.grid.beta_nodes[:, None]
        result = beta * field
        for family, (normal, tangential, coefficient) in zip(
            self.grid.faces, self._coefficients(field), strict=True
        ):
            flux = family.normal.T @ (coefficient * normal)
            if tangential is not None:
                flux = flux + family.tangential.T @ (coefficient * tangential)
            result = result + self.grid.face_factor * flux
        if not np.all(np.isfinite(result)):
            raise NonFiniteFieldError("operator output contains NaN or Inf")
        return result

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self._apply_block(self.grid.check_field(u))

    def apply_columns(self, fields: np.ndarray) -> np.ndarray:
        """A applied to every column of a (size, k) array."""
        block = np.asarray(fields, dtype=float)
        if block.ndim != 2 or block.shape[0] != self.grid.size:
            raise ValueError(
                f"field block shape {block.shape} does not match grid size {self.grid.size}"
            )
        return self._apply_block(block)

    def pairing(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.dot(u, v)) * self.grid.cell_volume

    def lagged_matrix(self, w: np.ndarray) -> sp.csr_matrix:
        """Diffusion coefficient frozen at w, so that lagged_matrix(u) @ u == A u."""
        field = self.grid.check_field(w)
        matrix = self._beta.copy()
        for family, (_, _, coefficient) in zip(
            self.grid.faces, self._coefficients(field), strict=True
        ):
            weights = sp.diags(coefficient)
            block = family.normal.T @ weights @ family.normal
            if family.tangential is not None:
                block = block + family.tangential.T @ weights @ family.tangential
            matrix = matrix + self.grid.face_factor * block
        return sp.csr_matrix(matrix)

    def jacobian(self, u: np.ndarray, epsilon: float | None = None) -> sp.csr_matrix:
        eps = self.epsilon_reg if epsilon is None else epsilon
        field = self.grid.check_field(u)
        matrix = self._beta.copy()
        for family, (normal, tangential) in zip(
            self.grid.faces, self.grid.face_gradients(field), strict=True
        ):
            tangential_values = np.zeros_like(normal) if tangential is None else tangential
            squared = normal * normal + tangential_values * tangential_values + eps * eps
            magnitude = np.sqrt(squared)
            with np.errstate(divide="ignore", invalid="ignore"):
                a = family.sigma * np.power(magnitude, self.p - 2.0)
                b = np.where(
                    magnitude > 0,
                    family.sigma * (self.p - 2.0) * np.power(magnitude, self.p - 4.0),
                    0.0,
                )
            block = family.normal.T @ sp.diags(a + b * normal * normal) @ family.normal
            if family.tangential is not None:
                cross = sp.diags(b * normal * tangential_values)
                block = (
                    block
                    + family.normal.T @ cross @ family.tangential
                    + family.tangential.T @ cross @ family.normal
                    + family.tangential.T
                    @ sp.diags(a + b * tangential_values * tangential_values)
                    @ family.tangential
                )
            matrix = matrix + self.grid.face_factor * block
        return sp.csr_matrix(matrix)

    def stiffness_bound(self, u: np.ndarray) -> float:
        """Gershgorin bound on the spectrum of the frozen Jacobian at u."""
        jacobian = self.jacobian(u, epsilon=0.0)
        return float(abs(jacobian).sum(axis=1).max()) if jacobian.shape[0] else 0.0


def apply_A(op: DiscreteOperator, u: np.ndarray) -> np.ndarray:
    return op.apply(u)


def energy_pairing(op: DiscreteOperator, u: np.ndarray) -> EnergyTerms:
    grid = op.grid
    field = grid.check_field(u)
    gradient = grad_p_energy(grid, field, op.p)
    beta = float(np.dot(grid.beta_nodes * field, field)) * grid.cell_volume
    pairing = op.pairing(op.apply(field), field)
    expected = gradient + beta
    if abs(pairing - expected) > _IDENTITY_TOLERANCE * max(abs(expected), abs(pairing)):
        raise AssertionError(
            f"summation by parts violated: <Au,u>={pairing!r} vs energies={expected!r}"
        )
    return EnergyTerms(grad_p_energy=gradient, beta_energy=beta, pairing=pairing)


def monotonicity_probe(op: DiscreteOperator, u: np.ndarray, v: np.ndarray) -> float:
    u_field = op.grid.check_field(u)
    v_field = op.grid.check_field(v)
    return op.pairing(op.apply(u_field) - op.apply(v_field), u_field - v_field)


def monotonicity_probe_columns(
    op: DiscreteOperator, u_block: np.ndarray, v_block: np.ndarray
) -> np.ndarray:
    """Column-wise <A u - A v, u - v> for (size, k) blocks of paired fields."""
    difference = op.apply_columns(u_block) - op.apply_columns(v_block)
    return np.einsum("ij,ij->j", difference, u_block - v_block) * op.grid.cell_volume


def full_rhs(op: DiscreteOperator, u: np.ndarray, f: NonlinearityModel) -> np.ndarray:
    """Time derivative g - A u - f(u)."""
    field = op.grid.check_field(u)
    return op.grid.g_nodes - op.apply(field) - f.f(field)


def manufactured_source(
    op: DiscreteOperator, f: NonlinearityModel, u_star: np.ndarray
) -> np.ndarray:
    """Source g for which u_star is a steady state."""
    field = op.grid.check_field(u_star)
    return op.apply(field) + f.f(field)
