from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.errors import ConfigurationError
from app.numerics.grid import Grid, State

MAGIC = b"PLAP"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sI4d")


@dataclass(frozen=True, slots=True, eq=False)
class Snapshot:
    n: int
    m_per_axis: int
    R: float
    t: float
    u: np.ndarray

    def to_state(self, grid: Grid) -> State:
        if (self.n, self.m_per_axis) != (grid.n, grid.m_per_axis) or self.R != grid.R:
            raise ConfigurationError(
                f"snapshot grid (n={self.n}, m={self.m_per_axis}, R={self.R!r}) does not match "
                f"configured grid (n={grid.n}, m={grid.m_per_axis}, R={grid.R!r})"
            )
        return State(u=self.u.copy(), t=self.t)


def encode_snapshot(grid: Grid, state: State) -> bytes:
    field = grid.check_field(state.u)
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, float(grid.n), float(grid.m_per_axis), grid.R, float(state.t)
    )
    return header + np.ascontiguousarray(field, dtype="<f8").tobytes()


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise ValueError("snapshot is shorter than its header")
    magic, version, n, m, radius, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    dim, nodes = int(n), int(m)
    expected = (nodes - 2) ** dim
    u = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(float)
    if u.size != expected:
        raise ValueError(f"snapshot holds {u.size} values, expected {expected}")
    return Snapshot(n=dim, m_per_axis=nodes, R=radius, t=t, u=u)


def write_snapshot(path: Path, grid: Grid, state: State) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(grid, state))
    return path


def read_snapshot(path: Path) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())


def write_field_csv(path: Path, grid: Grid, state: State) -> Path:
    """Interior nodes with coordinates, one row per node, floats written with repr."""
    field = grid.check_field(state.u)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [f"x{axis}" for axis in range(grid.n)] + ["u"]
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", repr(float(state.t))])
        writer.writerow(columns)
        for point, value in zip(grid.interior_coords, field, strict=True):
            writer.writerow([repr(float(item)) for item in point] + [repr(float(value))])
    return path
