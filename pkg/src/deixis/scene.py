"""Scene graph value types plus pinhole projection, ray casting and visibility.

Camera space is right-handed with x to the right, y down and z forward.
World space uses the same handedness; a camera with identity orientation at
the origin makes the two coincide.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .errors import PointBehindCamera

QUAT_TOL = 1e-9
DEFAULT_GRID = 8


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def __add__(self, other):  # type: ignore[override]
        return Vec3(self.x + other[0], self.y + other[1], self.z + other[2])

    def __sub__(self, other):
        return Vec3(self.x - other[0], self.y - other[1], self.z - other[2])

    def scale(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other) -> float:
        return self.x * other[0] + self.y * other[1] + self.z * other[2]

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        return Vec3(self.x / n, self.y / n, self.z / n)

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in self)


def vec3(values) -> Vec3:
    v = Vec3(float(values[0]), float(values[1]), float(values[2]))
    if not v.is_finite():
        raise ValueError(f"non-finite vector {values!r}")
    return v


@dataclass(frozen=True)
class Aabb:
    min: Vec3
    max: Vec3

    def __post_init__(self):
        object.__setattr__(self, "min", vec3(self.min))
        object.__setattr__(self, "max", vec3(self.max))
        if any(lo > hi for lo, hi in zip(self.min, self.max)):
            raise ValueError(f"invalid box: min {self.min} exceeds max {self.max}")

    @property
    def center(self) -> Vec3:
        return Vec3(*((lo + hi) * 0.5 for lo, hi in zip(self.min, self.max)))

    @property
    def extent(self) -> Vec3:
        return Vec3(*(hi - lo for lo, hi in zip(self.min, self.max)))

    def as_row(self) -> tuple:
        return (*self.min, *self.max)

    def contains(self, p, tol: float = 0.0) -> bool:
        return all(lo - tol <= c <= hi + tol for c, lo, hi in zip(p, self.min, self.max))

    @classmethod
    def from_center(cls, center, size) -> "Aabb":
        half = [s * 0.5 for s in size]
        return cls(
            Vec3(*(c - h for c, h in zip(center, half))),
            Vec3(*(c + h for c, h in zip(center, half))),
        )


@dataclass(frozen=True)
class SceneObject:
    id: str
    category: str
    attributes: dict
    bounds: Aabb
    referring_expression: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("object id must be non-empty")
        missing = {"color", "shape"} - set(self.attributes)
        if missing:
            raise ValueError(f"object {self.id} lacks attributes {sorted(missing)}")

    @property
    def centroid(self) -> Vec3:
        return self.bounds.center

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "attributes": dict(self.attributes),
            "bounds": {"min": list(self.bounds.min), "max": list(self.bounds.max)},
            "referring_expression": self.referring_expression,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneObject":
        return cls(
            id=d["id"],
            category=d["category"],
            attributes=dict(d["attributes"]),
            bounds=Aabb(vec3(d["bounds"]["min"]), vec3(d["bounds"]["max"])),
            referring_expression=d.get("referring_expression"),
        )


@dataclass(frozen=True)
class Scene:
    scene_id: str
    objects: tuple
    rng_seed: int = 0
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        objs = tuple(self.objects)
        object.__setattr__(self, "objects", objs)
        if len(objs) < 3:
            raise ValueError(f"scene {self.scene_id} needs at least 3 objects, got {len(objs)}")
        ids = [o.id for o in objs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"scene {self.scene_id} has duplicate object ids")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be unsigned")
        object.__setattr__(self, "_index", {o.id: o for o in objs})

    def get(self, object_id: str) -> SceneObject:
        return self._index[object_id]

    def __contains__(self, object_id) -> bool:
        return object_id in self._index

    def index_of(self, object_id: str) -> int:
        return [o.id for o in self.objects].index(object_id)

    def others(self, object_id: str) -> list:
        return [o for o in self.objects if o.id != object_id]

    def boxes(self) -> np.ndarray:
        return np.array([o.bounds.as_row() for o in self.objects], dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "rng_seed": self.rng_seed,
            "objects": [o.to_dict() for o in self.objects],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        return cls(
            scene_id=d["scene_id"],
            objects=tuple(SceneObject.from_dict(o) for o in d["objects"]),
            rng_seed=int(d.get("rng_seed", 0)),
        )


def _quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def quat_from_matrix(m) -> tuple:
    """Unit quaternion (w, x, y, z) for a proper rotation matrix, w kept non-negative."""
    m = np.asarray(m, dtype=np.float64)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        q = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = ((m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = ((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s)
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = ((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s)
    n = math.sqrt(sum(c * c for c in q))
    q = tuple(float(c / n) for c in q)
    return q if q[0] >= 0 else tuple(-c for c in q)


@dataclass(frozen=True)
class CameraPose:
    """Pinhole camera. ``orientation`` rotates camera-frame vectors into the world frame."""

    position: Vec3 = Vec3(0.0, 0.0, 0.0)
    orientation: tuple = (1.0, 0.0, 0.0, 0.0)
    fx: float = 280.0
    fy: float = 280.0
    cx: float = 224.0
    cy: float = 224.0
    width: int = 448
    height: int = 448

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        q = tuple(float(c) for c in self.orientation)
        if len(q) != 4 or abs(math.sqrt(sum(c * c for c in q)) - 1.0) > QUAT_TOL:
            raise ValueError(f"orientation must be a unit quaternion, got {self.orientation!r}")
        object.__setattr__(self, "orientation", q)
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("image size must be positive")

    @cached_property
    def cam_to_world(self) -> np.ndarray:
        return _quat_to_matrix(self.orientation)

    @cached_property
    def world_to_cam(self) -> np.ndarray:
        return np.ascontiguousarray(self.cam_to_world.T)

    @property
    def intrinsics(self) -> tuple:
        return (self.fx, self.fy, self.cx, self.cy, float(self.width), float(self.height))

    def to_camera(self, point) -> Vec3:
        d = np.asarray(point, dtype=np.float64) - np.asarray(self.position)
        return Vec3(*(float(c) for c in self.world_to_cam @ d))

    def to_world(self, point) -> Vec3:
        p = self.cam_to_world @ np.asarray(point, dtype=np.float64) + np.asarray(self.position)
        return Vec3(*(float(c) for c in p))

    def direction_to_world(self, direction) -> Vec3:
        return Vec3(*(float(c) for c in self.cam_to_world @ np.asarray(direction, dtype=np.float64)))

    def in_image(self, u: float, v: float) -> bool:
        return 0.0 <= u < self.width and 0.0 <= v < self.height

    def with_pose(self, position, orientation) -> "CameraPose":
        return CameraPose(position, orientation, self.fx, self.fy, self.cx, self.cy, self.width, self.height)

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "orientation": list(self.orientation),
            "intrinsics": {
                "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraPose":
        k = d["intrinsics"]
        return cls(
            vec3(d["position"]), tuple(d["orientation"]),
            k["fx"], k["fy"], k["cx"], k["cy"], int(k["width"]), int(k["height"]),
        )


def look_at(position, target, up=(0.0, -1.0, 0.0), template: CameraPose | None = None) -> CameraPose:
    """Camera at ``position`` whose optical axis passes through ``target``."""
    template = template or CameraPose()
    pos = np.asarray(position, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - pos
    fwd /= np.linalg.norm(fwd)
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(fwd, up)
    if np.linalg.norm(right) < 1e-12:
        raise ValueError("up vector parallel to viewing direction")
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    rot = np.column_stack([right, down, fwd])
    return template.with_pose(vec3(pos), quat_from_matrix(rot))


@dataclass(frozen=True)
class Ray:
    origin: Vec3
    direction: Vec3

    def __post_init__(self):
        object.__setattr__(self, "origin", vec3(self.origin))
        d = vec3(self.direction)
        if abs(d.norm() - 1.0) > QUAT_TOL:
            raise ValueError(f"ray direction must be unit length, got |d|={d.norm()!r}")
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> Vec3:
        return self.origin + self.direction.scale(t)


def project_point(camera: CameraPose, point) -> tuple:
    """Pixel coordinates and forward depth of a world point."""
    p = vec3(point)
    xc, yc, zc = camera.to_camera(p)
    if zc <= 0.0:
        raise PointBehindCamera(f"point {tuple(p)} has depth {zc:.6g} <= 0")
    return (camera.cx + camera.fx * xc / zc, camera.cy + camera.fy * yc / zc, zc)


def unproject(camera: CameraPose, u: float, v: float, depth: float) -> Vec3:
    xc = (u - camera.cx) * depth / camera.fx
    yc = (v - camera.cy) * depth / camera.fy
    return camera.to_world((xc, yc, depth))


def ray_aabb_intersect(ray: Ray, box: Aabb) -> Optional[float]:
    """Slab-method entry distance, 0 when the origin is inside, None on a miss."""
    t = kernels.ray_aabb(ray.origin, ray.direction, box.as_row())
    return None if math.isnan(t) else float(t)


def surface_samples(box: Aabb, n: int = DEFAULT_GRID) -> np.ndarray:
    """Boundary points of an n x n x n lattice spanning the box."""
    if n < 2:
        raise ValueError("grid density must be at least 2")
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(box.min, box.max)]
    ii = np.arange(n)
    i, j, k = np.meshgrid(ii, ii, ii, indexing="ij")
    edge = (i == 0) | (i == n - 1) | (j == 0) | (j == n - 1) | (k == 0) | (k == n - 1)
    pts = np.stack([axes[0][i[edge]], axes[1][j[edge]], axes[2][k[edge]]], axis=1)
    return np.ascontiguousarray(pts)


def visible_fraction(
    obj: SceneObject,
    camera: CameraPose,
    occluders: Sequence[SceneObject] = (),
    grid: int = DEFAULT_GRID,
) -> float:
    """Share of the object's surface samples that land in the image unoccluded."""
    if any(o.id == obj.id for o in occluders):
        raise ValueError(f"object {obj.id} cannot occlude itself")
    pts = surface_samples(obj.bounds, grid)
    occ = np.array([o.bounds.as_row() for o in occluders], dtype=np.float64).reshape(-1, 6)
    hits = kernels.count_visible(pts, camera.position, camera.world_to_cam, camera.intrinsics, occ)
    return hits / len(pts)


def visible_fractions(scene: Scene, camera: CameraPose, grid: int = DEFAULT_GRID) -> dict:
    """Visible fraction of every object with all other objects as occluders."""
    return {o.id: visible_fraction(o, camera, scene.others(o.id), grid) for o in scene.objects}
