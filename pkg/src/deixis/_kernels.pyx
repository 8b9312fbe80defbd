# cython: language_level=3
"""Compiled geometry kernels.

Arithmetic order mirrors ``_kernels_py`` operation for operation so both
backends return bit-identical doubles on IEEE-754 hardware.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, isnan, sqrt

cnp.import_array()


cdef inline double _slab(double ox, double oy, double oz,
                         double dx, double dy, double dz,
                         double lx, double ly, double lz,
                         double hx, double hy, double hz) noexcept nogil:
    cdef double tmin = -INFINITY
    cdef double tmax = INFINITY
    cdef double o[3]
    cdef double d[3]
    cdef double lo[3]
    cdef double hi[3]
    cdef double inv, t0, t1, tmp
    cdef int a
    o[0] = ox; o[1] = oy; o[2] = oz
    d[0] = dx; d[1] = dy; d[2] = dz
    lo[0] = lx; lo[1] = ly; lo[2] = lz
    hi[0] = hx; hi[1] = hy; hi[2] = hz
    for a in range(3):
        if d[a] == 0.0:
            if o[a] < lo[a] or o[a] > hi[a]:
                return NAN
        else:
            inv = 1.0 / d[a]
            t0 = (lo[a] - o[a]) * inv
            t1 = (hi[a] - o[a]) * inv
            if t0 > t1:
                tmp = t0
                t0 = t1
                t1 = tmp
            if t0 > tmin:
                tmin = t0
            if t1 < tmax:
                tmax = t1
    if tmin < 0.0:
        tmin = 0.0
    if tmax < tmin:
        return NAN
    return tmin


def ray_aabb(origin, direction, box):
    """Entry distance of a ray into a box ``(minx, miny, minz, maxx, maxy, maxz)``; NaN on miss."""
    return _slab(origin[0], origin[1], origin[2],
                 direction[0], direction[1], direction[2],
                 box[0], box[1], box[2], box[3], box[4], box[5])


def ray_boxes(origin, direction, boxes):
    cdef double[:, ::1] b = np.ascontiguousarray(boxes, dtype=np.float64).reshape(-1, 6)
    cdef Py_ssize_t k, n = b.shape[0]
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef double dx = direction[0], dy = direction[1], dz = direction[2]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for k in range(n):
            res[k] = _slab(ox, oy, oz, dx, dy, dz,
                           b[k, 0], b[k, 1], b[k, 2], b[k, 3], b[k, 4], b[k, 5])
    return out


def count_visible(points, cam_pos, rot, intrinsics, occluders, double eps=1e-9):
    """Count world points that project into the image and reach the camera unblocked."""
    cdef double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    cdef double[:, ::1] r = np.ascontiguousarray(rot, dtype=np.float64)
    cdef double[:, ::1] occ = np.ascontiguousarray(occluders, dtype=np.float64).reshape(-1, 6)
    cdef double cx0 = cam_pos[0], cy0 = cam_pos[1], cz0 = cam_pos[2]
    cdef double fx = intrinsics[0], fy = intrinsics[1]
    cdef double ppx = intrinsics[2], ppy = intrinsics[3]
    cdef double width = intrinsics[4], height = intrinsics[5]
    cdef Py_ssize_t i, k, m = p.shape[0], n_occ = occ.shape[0]
    cdef double wx, wy, wz, xc, yc, zc, u, v, dist, t
    cdef long count = 0
    cdef bint blocked
    with nogil:
        for i in range(m):
            wx = p[i, 0] - cx0
            wy = p[i, 1] - cy0
            wz = p[i, 2] - cz0
            xc = r[0, 0] * wx + r[0, 1] * wy + r[0, 2] * wz
            yc = r[1, 0] * wx + r[1, 1] * wy + r[1, 2] * wz
            zc = r[2, 0] * wx + r[2, 1] * wy + r[2, 2] * wz
            if zc <= 0.0:
                continue
            u = ppx + fx * xc / zc
            v = ppy + fy * yc / zc
            if u < 0.0 or u >= width or v < 0.0 or v >= height:
                continue
            dist = sqrt(wx * wx + wy * wy + wz * wz)
            if dist == 0.0:
                continue
            blocked = False
            for k in range(n_occ):
                t = _slab(cx0, cy0, cz0, wx / dist, wy / dist, wz / dist,
                          occ[k, 0], occ[k, 1], occ[k, 2], occ[k, 3], occ[k, 4], occ[k, 5])
                if not isnan(t) and t < dist - eps:
                    blocked = True
                    break
            if not blocked:
                count += 1
    return count
