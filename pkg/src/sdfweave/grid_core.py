"""Dense axis-aligned 3D voxel grids: storage, trilinear sampling,
finite-difference gradients, and the DWGRID01 binary format.

Linear voxel order everywhere (memory layout aside) is x-fastest:
``index = x + Nx*(y + Ny*z)``. Multi-channel voxels store their channels
contiguously at that index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"DWGRID01"


class GridFormatError(Exception):
    """Malformed grid file: bad magic, truncated payload, or invalid header."""


@dataclass(frozen=True)
class GridHeader:
    """Lattice geometry: voxel counts, world position of voxel (0,0,0) center,
    edge length per voxel, and channel count (1 scalar, 4 vector+weight)."""

    dims: tuple[int, int, int]
    origin: tuple[float, float, float]
    voxel_size: float
    channels: int = 1

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(d) < 2 for d in self.dims):
            raise ValueError(f"dims must be three counts >= 2, got {self.dims}")
        if not np.isfinite(self.voxel_size) or self.voxel_size <= 0:
            raise ValueError(f"voxel_size must be finite and > 0, got {self.voxel_size}")
        if len(self.origin) != 3 or not all(np.isfinite(o) for o in self.origin):
            raise ValueError(f"origin must be three finite floats, got {self.origin}")
        if int(self.channels) < 1:
            raise ValueError(f"channels must be >= 1, got {self.channels}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "voxel_size", float(self.voxel_size))
        object.__setattr__(self, "channels", int(self.channels))

    @property
    def voxel_count(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        """World-space box spanned by the voxel centers (the sampled domain)."""
        lo = np.asarray(self.origin, dtype=np.float64)
        hi = lo + (np.asarray(self.dims, dtype=np.float64) - 1.0) * self.voxel_size
        return lo, hi


class Grid3:
    """A dense grid of ``header.channels`` floats per voxel.

    ``values`` has shape (Nx, Ny, Nz) for one channel, (Nx, Ny, Nz, C)
    otherwise. Storage is float32; float64 values are accepted as-is so
    numerical code can work at higher precision in memory.
    """

    expected_channels: int | None = None

    def __init__(self, header: GridHeader, values: np.ndarray):
        values = np.asarray(values)
        if values.dtype not in (np.float32, np.float64):
            values = values.astype(np.float32)
        shape = header.dims if header.channels == 1 else (*header.dims, header.channels)
        if values.shape != shape:
            raise ValueError(f"values shape {values.shape} does not match header {shape}")
        if self.expected_channels is not None and header.channels != self.expected_channels:
            raise ValueError(
                f"{type(self).__name__} requires {self.expected_channels} channels, "
                f"header has {header.channels}"
            )
        self.header = header
        self.values = np.ascontiguousarray(values)

    @classmethod
    def zeros(cls, header: GridHeader, dtype=np.float32):
        shape = header.dims if header.channels == 1 else (*header.dims, header.channels)
        return cls(header, np.zeros(shape, dtype=dtype))

    def copy(self):
        return type(self)(self.header, self.values.copy())


class ScalarGrid3(Grid3):
    """Scalar field, typically a signed distance field phi."""

    expected_channels = 1

    @classmethod
    def full(cls, header: GridHeader, fill: float, dtype=np.float32):
        return cls(header, np.full(header.dims, fill, dtype=dtype))


class VectorGrid3(Grid3):
    """Per voxel: a 3-vector and a nonnegative accumulation weight."""

    expected_channels = 4

    @property
    def vectors(self) -> np.ndarray:
        return self.values[..., :3]

    @property
    def weights(self) -> np.ndarray:
        return self.values[..., 3]


class ColorGrid3(Grid3):
    """Per voxel: rgb in [0,1]^3 and a nonnegative confidence weight."""

    expected_channels = 4

    @property
    def rgb(self) -> np.ndarray:
        return self.values[..., :3]

    @property
    def weights(self) -> np.ndarray:
        return self.values[..., 3]


def world_to_grid(p, header: GridHeader) -> np.ndarray:
    """World point(s) -> continuous grid coordinate(s), (p - origin)/h."""
    p = np.asarray(p, dtype=np.float64)
    return (p - np.asarray(header.origin)) / header.voxel_size


def grid_to_world(g, header: GridHeader) -> np.ndarray:
    """Continuous grid coordinate(s) -> world point(s), origin + g*h."""
    g = np.asarray(g, dtype=np.float64)
    return np.asarray(header.origin) + g * header.voxel_size


def trilinear_stencil(g, dims) -> tuple[np.ndarray, np.ndarray]:
    """8-corner interpolation stencil for continuous grid coordinate(s) ``g``.

    Coordinates are clamped to [0, dim-1] per axis before the cell is located,
    so out-of-bounds queries interpolate boundary values. Returns
    (corners, weights) with shapes (..., 8, 3) int and (..., 8); weights sum
    to 1. Corner order: bit 0 -> +x, bit 1 -> +y, bit 2 -> +z.
    """
    g = np.asarray(g, dtype=np.float64)
    dims = np.asarray(dims, dtype=np.int64)
    gc = np.clip(g, 0.0, (dims - 1).astype(np.float64))
    base = np.minimum(np.floor(gc).astype(np.int64), dims - 2)
    frac = gc - base

    offsets = np.array(
        [[(b >> 0) & 1, (b >> 1) & 1, (b >> 2) & 1] for b in range(8)], dtype=np.int64
    )
    corners = base[..., None, :] + offsets
    f = frac[..., None, :]
    w = np.where(offsets.astype(bool), f, 1.0 - f)
    weights = w[..., 0] * w[..., 1] * w[..., 2]
    return corners, weights


def sample_trilinear(grid: Grid3 | np.ndarray, g):
    """Trilinear interpolation of a grid at continuous coordinate(s) ``g``.

    Exact at voxel centers. Scalar grids return floats, multi-channel grids
    return (..., C) arrays.
    """
    values = grid.values if isinstance(grid, Grid3) else np.asarray(grid)
    dims = values.shape[:3]
    corners, weights = trilinear_stencil(g, dims)
    ix, iy, iz = corners[..., 0], corners[..., 1], corners[..., 2]
    corner_vals = values[ix, iy, iz]
    if corner_vals.ndim == weights.ndim:  # scalar grid
        out = np.sum(corner_vals * weights, axis=-1)
    else:
        out = np.sum(corner_vals * weights[..., None], axis=-2)
    return float(out) if out.ndim == 0 and values.ndim == 3 else out


def gradient_grid(grid: ScalarGrid3 | np.ndarray, voxel_size: float | None = None) -> np.ndarray:
    """Finite-difference gradient of a scalar grid at every voxel, shape (Nx,Ny,Nz,3).

    Central differences in the interior, one-sided at the boundary faces.
    """
    if isinstance(grid, Grid3):
        phi = grid.values
        h = grid.header.voxel_size
    else:
        phi = np.asarray(grid)
        if voxel_size is None:
            raise ValueError("voxel_size required when passing a bare array")
        h = float(voxel_size)
    out = np.empty((*phi.shape, 3), dtype=np.float64)
    for ax in range(3):
        d = np.empty(phi.shape, dtype=np.float64)
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        mid = [slice(None)] * 3
        lo[ax], hi[ax], mid[ax] = slice(0, 1), slice(-1, None), slice(1, -1)
        plus = [slice(None)] * 3
        minus = [slice(None)] * 3
        plus[ax], minus[ax] = slice(2, None), slice(0, -2)
        d[tuple(mid)] = (phi[tuple(plus)].astype(np.float64) - phi[tuple(minus)]) / (2.0 * h)
        first = [slice(None)] * 3
        second = [slice(None)] * 3
        first[ax], second[ax] = slice(0, 1), slice(1, 2)
        d[tuple(lo)] = (phi[tuple(second)].astype(np.float64) - phi[tuple(first)]) / h
        last = [slice(None)] * 3
        penult = [slice(None)] * 3
        last[ax], penult[ax] = slice(-1, None), slice(-2, -1)
        d[tuple(hi)] = (phi[tuple(last)].astype(np.float64) - phi[tuple(penult)]) / h
        out[..., ax] = d
    return out


def gradient_central(grid: ScalarGrid3, idx) -> np.ndarray:
    """Finite-difference gradient at one voxel index (x, y, z).

    Same stencil as :func:`gradient_grid`: central in the interior, one-sided
    at boundary voxels.
    """
    phi = grid.values
    h = grid.header.voxel_size
    x, y, z = (int(i) for i in idx)
    dims = phi.shape
    out = np.empty(3, dtype=np.float64)
    pos = [x, y, z]
    for ax in range(3):
        i = pos[ax]
        if i == 0:
            p, m, denom = 1, 0, h
        elif i == dims[ax] - 1:
            p, m, denom = dims[ax] - 1, dims[ax] - 2, h
        else:
            p, m, denom = i + 1, i - 1, 2.0 * h
        a = pos.copy()
        b = pos.copy()
        a[ax], b[ax] = p, m
        out[ax] = (float(phi[tuple(a)]) - float(phi[tuple(b)])) / denom
    return out


_HEADER_STRUCT = struct.Struct("<4I3ff")  # Nx Ny Nz channels, origin xyz, voxel_size


def write_grid(grid: Grid3, path) -> None:
    """Serialize a grid to the DWGRID01 format.

    Layout (little-endian): 8-byte magic ``DWGRID01``; u32 Nx, Ny, Nz,
    channels; f32 origin x, y, z; f32 voxel_size; then Nx*Ny*Nz*channels
    f32 values, channels contiguous per voxel, voxels in x-fastest linear
    order. Round trips are bit-exact.
    """
    h = grid.header
    vals = grid.values.astype(np.float32, copy=False)
    if h.channels == 1:
        vals = vals[..., None]
    payload = np.ascontiguousarray(vals.transpose(2, 1, 0, 3))
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEADER_STRUCT.pack(*h.dims, h.channels, *h.origin, h.voxel_size))
        f.write(payload.tobytes())


def read_grid(path, cls: type = Grid3) -> Grid3:
    """Read a DWGRID01 file. ``cls`` selects the grid type (channel-checked)."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < len(MAGIC) + _HEADER_STRUCT.size:
        raise GridFormatError(f"{path}: truncated header ({len(data)} bytes)")
    if data[: len(MAGIC)] != MAGIC:
        raise GridFormatError(f"{path}: bad magic {data[:len(MAGIC)]!r}")
    fields = _HEADER_STRUCT.unpack_from(data, len(MAGIC))
    nx, ny, nz, channels = fields[:4]
    origin = fields[4:7]
    voxel_size = fields[7]
    try:
        header = GridHeader(dims=(nx, ny, nz), origin=origin, voxel_size=voxel_size,
                            channels=channels)
    except ValueError as e:
        raise GridFormatError(f"{path}: invalid header: {e}") from e
    expected = nx * ny * nz * channels * 4
    body = data[len(MAGIC) + _HEADER_STRUCT.size:]
    if len(body) != expected:
        raise GridFormatError(
            f"{path}: payload is {len(body)} bytes, expected {expected}"
        )
    flat = np.frombuffer(body, dtype="<f4").reshape(nz, ny, nx, channels)
    values = np.ascontiguousarray(flat.transpose(2, 1, 0, 3))
    if channels == 1:
        values = values[..., 0]
    if cls.expected_channels is not None and channels != cls.expected_channels:
        raise GridFormatError(
            f"{path}: {cls.__name__} requires {cls.expected_channels} channels, "
            f"file has {channels}"
        )
    return cls(header, values)
