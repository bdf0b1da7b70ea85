from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from app.errors import ConfigurationError, NonFiniteFieldError
from app.model.problem import Problem
from app.schemas import GridSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class State:
    """Field on interior nodes (Dirichlet zero on the boundary) at time t."""

    u: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.u)):
            raise NonFiniteFieldError(f"state at t={self.t!r} contains NaN or Inf")


@dataclass(frozen=True, slots=True)
class FaceFamily:
    """Faces normal to one axis: difference operators and sampled weights."""

    normal: sp.csr_matrix
    tangential: sp.csr_matrix | None
    sigma: np.ndarray
    midpoints: np.ndarray


@dataclass(frozen=True, slots=True, eq=False)
class Grid:
    n: int
    R: float
    m_per_axis: int
    h: float
    normal_only: bool
    axis: np.ndarray
    faces: tuple[FaceFamily, ...]
    beta_nodes: np.ndarray
    g_nodes: np.ndarray

    @classmethod
    def build(
        cls,
        problem: Problem,
        R: float,
        m_per_axis: int,
        *,
        normal_only: bool = False,
    ) -> Grid:
        n = problem.dim
        if n not in (1, 2):
            raise ConfigurationError(f"unsupported dimension n={n}")
        if m_per_axis < 3:
            raise ConfigurationError("m_per_axis must be >= 3")
        if R <= 0:
            raise ConfigurationError("R must be positive")

        axis = np.linspace(-R, R, m_per_axis)
        h = 2.0 * R / (m_per_axis - 1)
        faces = _build_faces(problem, axis, h, n, normal_only)

        coords = _interior_coords(axis, n)
        beta_nodes = problem.beta.evaluate(coords)
        g_nodes = problem.g.evaluate(coords)
        if not np.all(np.isfinite(beta_nodes)):
            singular = problem.beta.singular_at_origin
            reason = " (profile is singular at the origin)" if singular else ""
            raise ConfigurationError(f"beta is not finite at every interior node{reason}")
        if not np.all(np.isfinite(g_nodes)):
            raise ConfigurationError("g is not finite at every interior node")

        logger.debug("Built grid n=%s m=%s R=%s h=%s", n, m_per_axis, R, h)
        return cls(
            n=n,
            R=float(R),
            m_per_axis=m_per_axis,
            h=h,
            normal_only=normal_only,
            axis=axis,
            faces=faces,
            beta_nodes=beta_nodes,
            g_nodes=g_nodes,
        )

    @classmethod
    def from_spec(cls, problem: Problem, spec: GridSpec) -> Grid:
        return cls.build(problem, spec.R, spec.m_per_axis, normal_only=spec.normal_only)

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return (self.m_per_axis - 2,) * self.n

    @property
    def size(self) -> int:
        return (self.m_per_axis - 2) ** self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @property
    def face_factor(self) -> float:
        # In 2-D each family of faces covers the domain once; the full stencil shares
        # area between the two families.
        return 0.5 if self.n == 2 and not self.normal_only else 1.0

    @property
    def face_weight(self) -> float:
        return self.face_factor * self.cell_volume

    @property
    def interior_coords(self) -> np.ndarray:
        return _interior_coords(self.axis, self.n)

    @property
    def node_coords(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.n)

    @property
    def boundary_mask(self) -> np.ndarray:
        index = np.indices((self.m_per_axis,) * self.n).reshape(self.n, -1)
        return np.any((index == 0) | (index == self.m_per_axis - 1), axis=0)

    @property
    def interior_radius(self) -> np.ndarray:
        coords = self.interior_coords
        return np.sqrt(np.sum(coords * coords, axis=1))

    @property
    def sigma_faces(self) -> np.ndarray:
        return np.concatenate([family.sigma for family in self.faces])

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    def check_field(self, u: np.ndarray) -> np.ndarray:
        field = np.asarray(u, dtype=float)
        if field.shape != (self.size,):
            raise ValueError(f"field shape {field.shape} does not match grid size {self.size}")
        return field

    def sample(self, func) -> np.ndarray:
        """Evaluate func(points) on interior nodes; points has shape (size, n)."""
        return np.asarray(func(self.interior_coords), dtype=float).reshape(self.size)

    def embed(self, u: np.ndarray) -> np.ndarray:
        """Interior field padded with the zero Dirichlet boundary, full node shape."""
        full = np.zeros((self.m_per_axis,) * self.n)
        full[(slice(1, -1),) * self.n] = self.check_field(u).reshape(self.interior_shape)
        return full

    def face_gradients(self, u: np.ndarray) -> list[tuple[np.ndarray, np.ndarray | None]]:
        field = self.check_field(u)
        return [
            (
                family.normal @ field,
                None if family.tangential is None else family.tangential @ field,
            )
            for family in self.faces
        ]

    def with_source(self, g_nodes: np.ndarray) -> Grid:
        source = self.check_field(g_nodes).copy()
        if not np.all(np.isfinite(source)):
            raise NonFiniteFieldError("source field contains NaN or Inf")
        return dataclasses.replace(self, g_nodes=source)


def _interior_coords(axis: np.ndarray, n: int) -> np.ndarray:
    interior = axis[1:-1]
    mesh = np.meshgrid(*([interior] * n), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, n)


def _forward_difference(m: int, h: float) -> sp.csr_matrix:
    inner = m - 2
    return ((sp.eye(m - 1, inner, k=0) - sp.eye(m - 1, inner, k=-1)) / h).tocsr()


def _face_average(m: int) -> sp.csr_matrix:
    inner = m - 2
    return (0.5 * (sp.eye(m - 1, inner, k=0) + sp.eye(m - 1, inner, k=-1))).tocsr()


def _central_difference(m: int, h: float) -> sp.csr_matrix:
    inner = m - 2
    return ((sp.eye(inner, inner, k=1) - sp.eye(inner, inner, k=-1)) / (2.0 * h)).tocsr()


def _build_faces(
    problem: Problem,
    axis: np.ndarray,
    h: float,
    n: int,
    normal_only: bool,
) -> tuple[FaceFamily, ...]:
    m = axis.size
    forward = _forward_difference(m, h)
    midpoints_1d = 0.5 * (axis[:-1] + axis[1:])

    if n == 1:
        midpoints = midpoints_1d.reshape(-1, 1)
        families = [FaceFamily(forward, None, problem.sigma.evaluate(midpoints), midpoints)]
    else:
        identity = sp.eye(m - 2, format="csr")
        average = _face_average(m)
        central = _central_difference(m, h)
        interior = axis[1:-1]

        x_mesh = np.meshgrid(midpoints_1d, interior, indexing="ij")
        x_points = np.stack(x_mesh, axis=-1).reshape(-1, 2)
        y_mesh = np.meshgrid(interior, midpoints_1d, indexing="ij")
        y_points = np.stack(y_mesh, axis=-1).reshape(-1, 2)

        families = [
            FaceFamily(
                sp.kron(forward, identity, format="csr"),
                None if normal_only else sp.kron(average, central, format="csr"),
                problem.sigma.evaluate(x_points),
                x_points,
            ),
            FaceFamily(
                sp.kron(identity, forward, format="csr"),
                None if normal_only else sp.kron(central, average, format="csr"),
                problem.sigma.evaluate(y_points),
                y_points,
            ),
        ]

    for family in families:
        if not np.all(np.isfinite(family.sigma)) or np.any(family.sigma < 0):
            raise ConfigurationError("sigma must be finite and nonnegative at every face midpoint")
    return tuple(families)
