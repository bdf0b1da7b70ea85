from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from app.errors import NonFiniteFieldError, NonlinearityOverflowError


class CoefficientProfile(ABC):
    """Radial coefficient x -> value(|x|)."""

    kind: str

    @abstractmethod
    def radial(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        return self.radial(r)

    @property
    def singular_at_origin(self) -> bool:
        return False


class NonlinearityModel(ABC):
    kind: str
    safe_bound: float = float("inf")

    @abstractmethod
    def _f(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def _f_prime(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def _antiderivative(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def derived_c_mono(self) -> float | None:
        return None

    def f(self, s: np.ndarray | float) -> np.ndarray:
        return self._f(self._guard(s))

    def f_prime(self, s: np.ndarray | float) -> np.ndarray:
        return self._f_prime(self._guard(s))

    def F(self, s: np.ndarray | float) -> np.ndarray:
        return self._antiderivative(self._guard(s))

    def _guard(self, s: np.ndarray | float) -> np.ndarray:
        values = np.asarray(s, dtype=float)
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError(f"non-finite argument passed to {self.kind} source term")
        if values.size and float(np.max(np.abs(values))) > self.safe_bound:
            raise NonlinearityOverflowError(
                f"{self.kind} evaluated at |s|={float(np.max(np.abs(values))):.6g} "
                f"beyond safe bound {self.safe_bound:g}"
            )
        return values
