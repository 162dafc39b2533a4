"""Synthetic fixtures: analytic SDF grids and simple meshes.

Shared by the tests, the demo scripts, and the bundled pipeline fixture.
"""

from __future__ import annotations

import numpy as np

from .grid_core import GridHeader, ScalarGrid3


def voxel_centers(header: GridHeader) -> np.ndarray:
    """World positions of all voxel centers, shape (Nx, Ny, Nz, 3)."""
    nx, ny, nz = header.dims
    ax = [np.arange(n, dtype=np.float64) * header.voxel_size + header.origin[i]
          for i, n in enumerate((nx, ny, nz))]
    gx, gy, gz = np.meshgrid(*ax, indexing="ij")
    return np.stack([gx, gy, gz], axis=-1)


def cube_header(extent: float = 1.0, resolution: int = 64,
                center=(0.0, 0.0, 0.0), channels: int = 1) -> GridHeader:
    """Cubic lattice of ``resolution``^3 voxels spanning ``extent`` per side."""
    h = extent / (resolution - 1)
    c = np.asarray(center, dtype=np.float64)
    origin = c - extent / 2.0
    return GridHeader(dims=(resolution,) * 3, origin=tuple(origin), voxel_size=h,
                      channels=channels)


def sphere_sdf(radius: float = 0.4, center=(0.0, 0.0, 0.0), resolution: int = 64,
               extent: float | None = None, dtype=np.float32) -> ScalarGrid3:
    """Exact sphere SDF ||p - c|| - r sampled on a cubic grid."""
    if extent is None:
        extent = 2.0 * radius * 1.3  # same 15%-per-side headroom as mesh conversion
    header = cube_header(extent=extent, resolution=resolution, center=center)
    p = voxel_centers(header)
    vals = np.linalg.norm(p - np.asarray(center), axis=-1) - radius
    return ScalarGrid3(header, vals.astype(dtype))


def plane_sdf(normal=(0.0, 0.0, 1.0), offset: float = 0.0, resolution: int = 16,
              extent: float = 1.0, scale: float = 1.0, dtype=np.float64) -> ScalarGrid3:
    """Plane field scale*(n.p - offset); a true SDF when scale == 1."""
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    header = cube_header(extent=extent, resolution=resolution)
    p = voxel_centers(header)
    vals = scale * (p @ n - offset)
    return ScalarGrid3(header, vals.astype(dtype))


def icosphere(radius: float = 1.0, center=(0.0, 0.0, 0.0), subdivisions: int = 3):
    """Triangulated sphere: subdivided icosahedron projected to the sphere.

    Returns (vertices (n,3) float64, triangles (m,3) int64).
    """
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)

    for _ in range(subdivisions):
        edge_mid: dict[tuple[int, int], int] = {}
        new_verts = [v for v in verts]

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in edge_mid:
                m = new_verts[a] + new_verts[b]
                m /= np.linalg.norm(m)
                edge_mid[key] = len(new_verts)
                new_verts.append(m)
            return edge_mid[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
        verts = np.asarray(new_verts)
        faces = np.asarray(new_faces, dtype=np.int64)

    return verts * radius + np.asarray(center, dtype=np.float64), faces


def smooth_noise(dims, amplitude: float, sigma: float = 3.0, seed: int = 0) -> np.ndarray:
    """Band-limited noise field scaled to the given peak amplitude."""
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(seed)
    field = gaussian_filter(rng.standard_normal(tuple(dims)), sigma=sigma, mode="nearest")
    peak = np.abs(field).max()
    if peak > 0:
        field *= amplitude / peak
    return field
