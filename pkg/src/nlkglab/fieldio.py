"""Field dump and CSV persistence.

Raw dump layout: one ASCII header line ``NLKG1 <points> <length> <time>``
followed by little-endian float64 payload, re/im interleaved per sample,
the u1 block then the u2 block (2*points doubles per component).  CSV
values are written with 17 significant digits so parsing them back is
bit-exact.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .grids import Field, Grid

__all__ = [
    "FieldFormatError",
    "write_field",
    "read_field",
    "write_diagnostics_csv",
    "read_csv_columns",
    "format_float",
]

MAGIC = "NLKG1"


class FieldFormatError(IOError):
    """Bad header or truncated payload in a field dump."""


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _interleave(z: np.ndarray) -> np.ndarray:
    out = np.empty(2 * len(z), dtype="<f8")
    out[0::2] = np.real(z)
    out[1::2] = np.imag(z)
    return out


def write_field(path: str | Path, w: Field, time: float = 0.0) -> None:
    with open(path, "wb") as fh:
        header = f"{MAGIC} {w.grid.points} {format_float(w.grid.length)} {format_float(time)}\n"
        fh.write(header.encode("ascii"))
        fh.write(_interleave(w.u1).tobytes())
        fh.write(_interleave(w.u2).tobytes())


def read_field(path: str | Path, grid: Optional[Grid] = None) -> tuple[Field, float]:
    """Read a dump; returns (field, time).  Grid is rebuilt from the header."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").strip()
        parts = header.split()
        if len(parts) != 4 or parts[0] != MAGIC:
            raise FieldFormatError(
                f"unsupported dump header {header!r} (expected '{MAGIC} <points> <length> <time>')"
            )
        points = int(parts[1])
        length = float(parts[2])
        time = float(parts[3])
        payload = fh.read()
    expected = 2 * 2 * points * 8
    if len(payload) != expected:
        raise FieldFormatError(
            f"truncated payload: {len(payload)} bytes, expected {expected}"
        )
    raw = np.frombuffer(payload, dtype="<f8")
    u1 = raw[: 2 * points : 2] + 1j * raw[1 : 2 * points : 2]
    u2 = raw[2 * points :: 2] + 1j * raw[2 * points + 1 :: 2]
    if grid is None:
        grid = Grid(length, points)
    elif grid.points != points or grid.length != length:
        raise FieldFormatError(
            f"dump grid ({points}, {length}) does not match supplied grid "
            f"({grid.points}, {grid.length})"
        )
    return Field(u1.copy(), u2.copy(), grid), time


def write_diagnostics_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Sequence[Sequence[float]],
) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def read_csv_columns(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(io.StringIO(fh.read()), delimiter=",", ndmin=2)
    return header, data
