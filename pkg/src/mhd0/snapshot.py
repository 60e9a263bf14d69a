"""Binary snapshots: a fixed header followed by seven raw little-endian float64 arrays.

Layout: ``b"MHD0"``, format version (uint32), n (uint32), L (float64),
t (float64), then rho, u1, u2, u3, H1, H2, H3 as row-major n^3 blocks.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .dynamics import FluidState
from .fields import GridSpec

MAGIC = b"MHD0"
VERSION = 1
HEADER = struct.Struct("<4sIIdd")
_LE = np.dtype("<f8")


class SnapshotError(IOError):
    """Malformed, truncated or unreadable snapshot."""


class GridMismatchError(SnapshotError):
    pass


def write_snapshot(state: FluidState, path) -> None:
    grid = state.grid
    blocks = np.concatenate([state.rho[None], state.u, state.H]).astype(_LE, copy=False)
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(HEADER.pack(MAGIC, VERSION, grid.n, float(grid.length), float(state.t)))
            fh.write(np.ascontiguousarray(blocks).tobytes(order="C"))
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path, grid: GridSpec | None = None) -> FluidState:
    """Read a snapshot; when ``grid`` is given, its size and length must match the file."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if len(data) < HEADER.size:
        raise SnapshotError(f"{path}: header truncated")
    magic, version, n, length, t = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported version {version}")
    expected = HEADER.size + 7 * n**3 * 8
    if len(data) != expected:
        raise SnapshotError(f"{path}: size {len(data)} does not match header (expected {expected})")
    if grid is not None and (grid.n != n or grid.length != length):
        raise GridMismatchError(f"{path}: snapshot grid n={n}, L={length} but run grid n={grid.n}, L={grid.length}")
    file_grid = grid or GridSpec(n, length)
    arr = np.frombuffer(data, dtype=_LE, offset=HEADER.size).reshape(7, n, n, n)
    arr = arr.astype(np.float64)
    return FluidState(file_grid, t, arr[0], arr[1:4], arr[4:7])
