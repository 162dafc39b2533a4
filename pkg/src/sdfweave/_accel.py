"""Numba kernels shared by the mesh conversion path: a flat triangle BVH,
exact point-triangle distance queries, and parity ray casts for inside/outside
classification. All kernels are deterministic; the voxel fill parallelizes
over disjoint outputs only.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_STACK_DEPTH = 128

# fixed, slightly off-axis ray directions so lattice-aligned queries cannot
# graze mesh edges/vertices exactly
PARITY_DIRS = np.array([
    [1.0, 3.1e-4, 5.2e-4],
    [4.7e-4, 1.0, 2.9e-4],
    [3.8e-4, 6.1e-4, 1.0],
])
PARITY_DIRS /= np.linalg.norm(PARITY_DIRS, axis=1, keepdims=True)


def build_bvh(tri_verts: np.ndarray, leaf_size: int = 8):
    """Median-split AABB tree over triangles.

    ``tri_verts`` is (m, 3, 3). Returns flat arrays
    (bmin, bmax, left, right, start, count, order): internal nodes have
    left/right child indices and count == 0; leaves have count > 0 and
    start indexing into ``order``.
    """
    m = tri_verts.shape[0]
    if m == 0:
        raise ValueError("cannot build a BVH over zero triangles")
    tmin = tri_verts.min(axis=1)
    tmax = tri_verts.max(axis=1)
    cent = tri_verts.mean(axis=1)
    order = np.arange(m, dtype=np.int64)

    bmin, bmax = [], []
    left, right, start, count = [], [], [], []

    def new_node():
        bmin.append(None)
        bmax.append(None)
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(bmin) - 1

    root = new_node()
    stack = [(root, 0, m)]
    while stack:
        node, lo, hi = stack.pop()
        idx = order[lo:hi]
        bmin[node] = tmin[idx].min(axis=0)
        bmax[node] = tmax[idx].max(axis=0)
        n = hi - lo
        if n <= leaf_size:
            start[node] = lo
            count[node] = n
            continue
        c = cent[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        mid = n // 2
        part = np.argpartition(c[:, axis], mid)
        order[lo:hi] = idx[part]
        l, r = new_node(), new_node()
        left[node], right[node] = l, r
        stack.append((l, lo, lo + mid))
        stack.append((r, lo + mid, hi))

    return (
        np.asarray(bmin, dtype=np.float64),
        np.asarray(bmax, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(start, dtype=np.int64),
        np.asarray(count, dtype=np.int64),
        order,
    )


@njit(cache=True)
def _point_tri_dsq(px, py, pz, tv, t):
    """Squared distance from point to triangle ``t`` of (m,3,3) array ``tv``."""
    ax, ay, az = tv[t, 0, 0], tv[t, 0, 1], tv[t, 0, 2]
    bx, by, bz = tv[t, 1, 0], tv[t, 1, 1], tv[t, 1, 2]
    cx, cy, cz = tv[t, 2, 0], tv[t, 2, 1], tv[t, 2, 2]

    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az

    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz

    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz

    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        denom = d1 - d3
        v = d1 / denom if denom != 0.0 else 0.5
        qx, qy, qz = apx - v * abx, apy - v * aby, apz - v * abz
        return qx * qx + qy * qy + qz * qz

    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz

    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        denom = d2 - d6
        w = d2 / denom if denom != 0.0 else 0.5
        qx, qy, qz = apx - w * acx, apy - w * acy, apz - w * acz
        return qx * qx + qy * qy + qz * qz

    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        denom = (d4 - d3) + (d5 - d6)
        w = (d4 - d3) / denom if denom != 0.0 else 0.5
        qx = bpx - w * (cx - bx)
        qy = bpy - w * (cy - by)
        qz = bpz - w * (cz - bz)
        return qx * qx + qy * qy + qz * qz

    denom = va + vb + vc
    if denom == 0.0:  # degenerate triangle; caller filters these up front
        return min(
            apx * apx + apy * apy + apz * apz,
            bpx * bpx + bpy * bpy + bpz * bpz,
        )
    inv = 1.0 / denom
    v = vb * inv
    w = vc * inv
    qx = apx - v * abx - w * acx
    qy = apy - v * aby - w * acy
    qz = apz - v * abz - w * acz
    return qx * qx + qy * qy + qz * qz


@njit(cache=True)
def _aabb_dsq(px, py, pz, bmin, bmax, node):
    d = 0.0
    for ax in range(3):
        p = px if ax == 0 else (py if ax == 1 else pz)
        lo = bmin[node, ax]
        hi = bmax[node, ax]
        if p < lo:
            d += (lo - p) * (lo - p)
        elif p > hi:
            d += (p - hi) * (p - hi)
    return d


@njit(cache=True)
def _bvh_closest_dsq(px, py, pz, bmin, bmax, left, right, start, count, order, tv):
    stack = np.empty(_STACK_DEPTH, dtype=np.int32)
    sp = 0
    stack[sp] = 0
    sp += 1
    best = np.inf
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if _aabb_dsq(px, py, pz, bmin, bmax, node) >= best:
            continue
        if count[node] > 0:
            for k in range(count[node]):
                t = order[start[node] + k]
                dsq = _point_tri_dsq(px, py, pz, tv, t)
                if dsq < best:
                    best = dsq
        else:
            l, r = left[node], right[node]
            dl = _aabb_dsq(px, py, pz, bmin, bmax, l)
            dr = _aabb_dsq(px, py, pz, bmin, bmax, r)
            if dl < dr:  # visit nearer child first
                if dr < best:
                    stack[sp] = r
                    sp += 1
                if dl < best:
                    stack[sp] = l
                    sp += 1
            else:
                if dl < best:
                    stack[sp] = l
                    sp += 1
                if dr < best:
                    stack[sp] = r
                    sp += 1
    return best


@njit(cache=True)
def _ray_hits_aabb(ox, oy, oz, dx, dy, dz, bmin, bmax, node):
    tmin = 0.0
    tmax = np.inf
    for ax in range(3):
        o = ox if ax == 0 else (oy if ax == 1 else oz)
        d = dx if ax == 0 else (dy if ax == 1 else dz)
        lo = bmin[node, ax]
        hi = bmax[node, ax]
        if abs(d) < 1e-300:
            if o < lo or o > hi:
                return False
        else:
            inv = 1.0 / d
            t1 = (lo - o) * inv
            t2 = (hi - o) * inv
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
            if tmin > tmax:
                return False
    return True


@njit(cache=True)
def _ray_tri_crosses(ox, oy, oz, dx, dy, dz, tv, t):
    """Moller-Trumbore with slightly inclusive barycentric bounds; t > 0 only."""
    ax, ay, az = tv[t, 0, 0], tv[t, 0, 1], tv[t, 0, 2]
    e1x, e1y, e1z = tv[t, 1, 0] - ax, tv[t, 1, 1] - ay, tv[t, 1, 2] - az
    e2x, e2y, e2z = tv[t, 2, 0] - ax, tv[t, 2, 1] - ay, tv[t, 2, 2] - az

    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < 1e-14:
        return False
    inv = 1.0 / det
    tx, ty, tz = ox - ax, oy - ay, oz - az
    u = (tx * px + ty * py + tz * pz) * inv
    if u < -1e-10 or u > 1.0 + 1e-10:
        return False
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < -1e-10 or u + v > 1.0 + 1e-10:
        return False
    th = (e2x * qx + e2y * qy + e2z * qz) * inv
    return th > 1e-12


@njit(cache=True)
def _bvh_ray_crossings(ox, oy, oz, dx, dy, dz, bmin, bmax, left, right, start,
                       count, order, tv):
    stack = np.empty(_STACK_DEPTH, dtype=np.int32)
    sp = 0
    stack[sp] = 0
    sp += 1
    crossings = 0
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _ray_hits_aabb(ox, oy, oz, dx, dy, dz, bmin, bmax, node):
            continue
        if count[node] > 0:
            for k in range(count[node]):
                t = order[start[node] + k]
                if _ray_tri_crosses(ox, oy, oz, dx, dy, dz, tv, t):
                    crossings += 1
        else:
            stack[sp] = left[node]
            sp += 1
            stack[sp] = right[node]
            sp += 1
    return crossings


@njit(cache=True, parallel=True)
def fill_signed_distance(out, origin, h, dirs, bmin, bmax, left, right, start,
                         count, order, tv):
    """Signed distance at every voxel center: exact surface distance from the
    BVH, sign by majority parity vote over the three fixed ray directions."""
    nx, ny, nz = out.shape
    total = nx * ny * nz
    for lin in prange(total):
        x = lin % nx
        y = (lin // nx) % ny
        z = lin // (nx * ny)
        px = origin[0] + x * h
        py = origin[1] + y * h
        pz = origin[2] + z * h
        dsq = _bvh_closest_dsq(px, py, pz, bmin, bmax, left, right, start,
                               count, order, tv)
        votes = 0
        for r in range(3):
            c = _bvh_ray_crossings(px, py, pz, dirs[r, 0], dirs[r, 1], dirs[r, 2],
                                   bmin, bmax, left, right, start, count, order, tv)
            if c % 2 == 1:
                votes += 1
        sign = -1.0 if votes >= 2 else 1.0
        out[x, y, z] = sign * np.sqrt(dsq)


@njit(cache=True, parallel=True)
def points_closest_dsq(points, bmin, bmax, left, right, start, count, order, tv, out):
    for i in prange(points.shape[0]):
        out[i] = _bvh_closest_dsq(points[i, 0], points[i, 1], points[i, 2],
                                  bmin, bmax, left, right, start, count, order, tv)
