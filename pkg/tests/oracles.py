"""Independent reference implementations used as test oracles.

Nothing here imports the numeric code under test, so agreement is evidence
rather than tautology.
"""
import math

import numpy as np


def march_ray_box(origin, direction, box, t_max=10.0, step=1e-3):
    """First sampled t at which the ray is inside the box, by brute-force marching; None on a miss."""
    lo, hi = np.asarray(box[:3]), np.asarray(box[3:])
    o, d = np.asarray(origin, float), np.asarray(direction, float)
    ts = np.arange(0.0, t_max, step)
    pts = o[None, :] + ts[:, None] * d[None, :]
    inside = np.all((pts >= lo) & (pts <= hi), axis=1)
    hit = np.flatnonzero(inside)
    return float(ts[hit[0]]) if hit.size else None


def _segment_hits_box(a, b, box):
    """Liang-Barsky clip of segment a->b against a box, open at b."""
    t0, t1 = 0.0, 1.0
    for axis in range(3):
        d = b[axis] - a[axis]
        lo, hi = box[axis], box[axis + 3]
        if abs(d) < 1e-15:
            if a[axis] < lo or a[axis] > hi:
                return False
            continue
        ta, tb = (lo - a[axis]) / d, (hi - a[axis]) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return False
    return t0 < 1.0 - 1e-9


def dense_visible_fraction(box, camera, occluders, n=80):
    """Visible share of a box surface sampled on an n x n lattice per face."""
    lo, hi = np.asarray(box[:3], float), np.asarray(box[3:], float)
    g = np.linspace(0.0, 1.0, n)
    pts = []
    for axis in range(3):
        a, b = [k for k in range(3) if k != axis]
        for side in (lo[axis], hi[axis]):
            for s in g:
                for t in g:
                    p = np.empty(3)
                    p[axis] = side
                    p[a] = lo[a] + s * (hi[a] - lo[a])
                    p[b] = lo[b] + t * (hi[b] - lo[b])
                    pts.append(p)
    pts = np.array(pts)
    R = camera.world_to_cam
    cam = np.asarray(camera.position)
    seen = 0
    for p in pts:
        x, y, z = R @ (p - cam)
        if z <= 0:
            continue
        u = camera.cx + camera.fx * x / z
        v = camera.cy + camera.fy * y / z
        if not (0 <= u < camera.width and 0 <= v < camera.height):
            continue
        if any(_segment_hits_box(cam, p, ob) for ob in occluders):
            continue
        seen += 1
    return seen / len(pts)


def layer_norm_loop(x, gain, bias, eps=1e-5):
    n = len(x)
    mu = sum(x) / n
    var = sum((v - mu) ** 2 for v in x) / n
    s = math.sqrt(var + eps)
    return [(x[i] - mu) / s * gain[i] + bias[i] for i in range(n)]


def central_difference(f, x, h=1e-5):
    """Gradient of scalar f at x by central differences; x is copied, never mutated."""
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f(x.copy())
        flat[i] = old - h
        down = f(x.copy())
        flat[i] = old
        gf[i] = (up - down) / (2 * h)
    return g
