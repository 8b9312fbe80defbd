"""Pure-Python geometry kernels, the fallback when the compiled module is absent."""
import math

import numpy as np

_INF = math.inf
_NAN = math.nan


def _slab(ox, oy, oz, dx, dy, dz, lx, ly, lz, hx, hy, hz):
    tmin = -_INF
    tmax = _INF
    for o, d, lo, hi in ((ox, dx, lx, hx), (oy, dy, ly, hy), (oz, dz, lz, hz)):
        if d == 0.0:
            if o < lo or o > hi:
                return _NAN
        else:
            inv = 1.0 / d
            t0 = (lo - o) * inv
            t1 = (hi - o) * inv
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > tmin:
                tmin = t0
            if t1 < tmax:
                tmax = t1
    if tmin < 0.0:
        tmin = 0.0
    if tmax < tmin:
        return _NAN
    return tmin


def ray_aabb(origin, direction, box):
    """Entry distance of a ray into a box ``(minx, miny, minz, maxx, maxy, maxz)``; NaN on miss."""
    return _slab(
        float(origin[0]), float(origin[1]), float(origin[2]),
        float(direction[0]), float(direction[1]), float(direction[2]),
        *(float(b) for b in box),
    )


def ray_boxes(origin, direction, boxes):
    b = np.asarray(boxes, dtype=np.float64).reshape(-1, 6)
    o = [float(x) for x in origin]
    d = [float(x) for x in direction]
    return np.array([_slab(*o, *d, *row) for row in b.tolist()], dtype=np.float64)


def count_visible(points, cam_pos, rot, intrinsics, occluders, eps=1e-9):
    """Count world points that project into the image and reach the camera unblocked."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3).tolist()
    r = np.asarray(rot, dtype=np.float64).tolist()
    occ = np.asarray(occluders, dtype=np.float64).reshape(-1, 6).tolist()
    cx0, cy0, cz0 = (float(c) for c in cam_pos)
    fx, fy, ppx, ppy, width, height = (float(c) for c in intrinsics)
    count = 0
    for px, py, pz in pts:
        wx = px - cx0
        wy = py - cy0
        wz = pz - cz0
        xc = r[0][0] * wx + r[0][1] * wy + r[0][2] * wz
        yc = r[1][0] * wx + r[1][1] * wy + r[1][2] * wz
        zc = r[2][0] * wx + r[2][1] * wy + r[2][2] * wz
        if zc <= 0.0:
            continue
        u = ppx + fx * xc / zc
        v = ppy + fy * yc / zc
        if u < 0.0 or u >= width or v < 0.0 or v >= height:
            continue
        dist = math.sqrt(wx * wx + wy * wy + wz * wz)
        if dist == 0.0:
            continue
        ux, uy, uz = wx / dist, wy / dist, wz / dist
        blocked = False
        for box in occ:
            t = _slab(cx0, cy0, cz0, ux, uy, uz, *box)
            if not math.isnan(t) and t < dist - eps:
                blocked = True
                break
        if not blocked:
            count += 1
    return count
