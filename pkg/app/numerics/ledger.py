from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import TextIO

import numpy as np

from app.model.base import NonlinearityModel
from app.numerics.norms import grad_p_energy, l2_norm
from app.numerics.operator import DiscreteOperator


@dataclass(frozen=True, slots=True)
class LedgerRow:
    t: float
    l2_sq: float
    grad_p_energy: float
    beta_energy: float
    fu_u: float
    F_total: float
    g_pair: float
    ut_l2_sq: float
    balance_residual: float

    def as_csv_row(self) -> list[str]:
        return [repr(float(value)) for value in astuple(self)]


LEDGER_COLUMNS = tuple(item.name for item in fields(LedgerRow))


def ledger_row(
    op: DiscreteOperator,
    f: NonlinearityModel,
    u_prev: np.ndarray,
    u_next: np.ndarray,
    t: float,
    dt: float,
) -> LedgerRow:
    grid = op.grid
    volume = grid.cell_volume
    l2_prev = l2_norm(grid, u_prev) ** 2
    l2_next = l2_norm(grid, u_next) ** 2
    gradient = grad_p_energy(grid, u_next, op.p)
    beta = float(np.dot(grid.beta_nodes * u_next, u_next)) * volume
    source = f.f(u_next)
    fu_u = float(np.dot(source, u_next)) * volume
    g_pair = float(np.dot(grid.g_nodes, u_next)) * volume
    rate = (u_next - u_prev) / dt
    pairing = op.pairing(op.apply(u_next), u_next)
    balance = abs(0.5 * (l2_next - l2_prev) / dt + pairing + fu_u - g_pair)
    return LedgerRow(
        t=float(t),
        l2_sq=l2_next,
        grad_p_energy=gradient,
        beta_energy=beta,
        fu_u=fu_u,
        F_total=float(np.sum(f.F(u_next))) * volume,
        g_pair=g_pair,
        ut_l2_sq=l2_norm(grid, rate) ** 2,
        balance_residual=balance,
    )


class LedgerSink(ABC):
    @abstractmethod
    def write(self, row: LedgerRow) -> None:
        raise NotImplementedError

    def close(self) -> None:
        return None


class InMemoryLedgerSink(LedgerSink):
    def __init__(self) -> None:
        self.rows: list[LedgerRow] = []

    def write(self, row: LedgerRow) -> None:
        self.rows.append(row)


class CsvLedgerSink(LedgerSink):
    """Streams rows to a CSV file with a fixed header; one writer per file."""

    def __init__(self, path: Path, *, append: bool = False) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_header = not (append and path.exists() and path.stat().st_size > 0)
        self.path = path
        self._handle: TextIO = path.open("a" if append else "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        if write_header:
            self._writer.writerow(LEDGER_COLUMNS)

    def write(self, row: LedgerRow) -> None:
        self._writer.writerow(row.as_csv_row())

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> CsvLedgerSink:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


@dataclass(slots=True)
class EnergyLedger:
    rows: list[LedgerRow]
    start_time: float = 0.0

    def append(self, row: LedgerRow) -> None:
        self.rows.append(row)

    @property
    def times(self) -> np.ndarray:
        return np.array([row.t for row in self.rows])

    @property
    def l2_sq(self) -> np.ndarray:
        return np.array([row.l2_sq for row in self.rows])

    def _step_sizes(self) -> np.ndarray:
        times = np.concatenate([[self.start_time], self.times])
        return np.diff(times)

    def time_derivative_integral(self, eps: float) -> float:
        """Sum of dt * ||u_t||^2 over steps ending after eps."""
        if not self.rows:
            return 0.0
        rates = np.array([row.ut_l2_sq for row in self.rows])
        mask = self.times > eps
        return float(np.sum(self._step_sizes()[mask] * rates[mask]))

    def cumulative_fu_u(self) -> float:
        """Sum of dt * integral f(u) u over all accepted steps."""
        if not self.rows:
            return 0.0
        values = np.array([row.fu_u for row in self.rows])
        return float(np.sum(self._step_sizes() * values))

    def write_csv(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(LEDGER_COLUMNS)
            for row in self.rows:
                writer.writerow(row.as_csv_row())
        return path
