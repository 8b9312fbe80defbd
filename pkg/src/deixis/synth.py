"""Procedural clip synthesis: desk scenes, egocentric viewpoints and pointing hand tracks.

Every random draw comes from a generator seeded by ``(seed, tag)`` so a clip is
a pure function of its seed and the :class:`GenConfig`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import vocab
from .errors import ConfigInvalid, NoEligibleTarget, NoValidViewpoint, UnreachableTarget
from .hand import INDEX_MCP, INDEX_TIP, HandPose, HandTrack, build_hand, hand_frame
from .scene import (
    Aabb,
    CameraPose,
    Ray,
    Scene,
    SceneObject,
    Vec3,
    look_at,
    quat_from_matrix,
    ray_aabb_intersect,
    visible_fraction,
)

# rng stream tags
_SCENE, _VIEW, _TARGET, _GESTURE, _CLIP, _CONF = 1, 2, 3, 4, 5, 6


def derive_rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *tags]))


def derive_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence([int(seed), *tags]).generate_state(1)[0])


@dataclass(frozen=True)
class GenConfig:
    min_objects: int = 4
    max_objects: int = 8
    fps: float = 30.0
    clip_len_s: tuple = (3.0, 5.0)
    dwell_min_s: float = 2.0
    hold_s: tuple = (2.0, 2.5)
    approach_s: tuple = (0.3, 0.5)
    retract_s: tuple = (0.3, 0.5)
    lead_s: tuple = (0.2, 0.5)
    gap_min_s: float = 0.5
    multi_gesture_prob: float = 0.5
    max_gestures: int = 3
    jitter_deg: float = 0.5
    separation_deg: float = 1.5
    conf_base: float = 0.95
    conf_noise: float = 0.05
    conf_lambda: float = 0.003
    conf_mu: float = 0.6
    edge_margin_px: float = 40.0
    hand_dropout_prob: float = 0.08
    drift_prob: float = 0.05
    duplicate_prob: float = 0.35
    viewpoint_attempts: int = 64
    placement_attempts: int = 64
    min_visible_objects: int = 3
    min_visible_fraction: float = 0.1
    max_target_depth: float = 2.0
    grid: int = 8
    desk_x: tuple = (-0.5, 0.5)
    desk_z: tuple = (0.6, 1.45)
    table_y: float = 0.35
    clearance: float = 0.03

    def validate(self) -> "GenConfig":
        if self.min_objects < 3:
            raise ConfigInvalid(f"min_objects must be >= 3, got {self.min_objects}")
        if self.max_objects < self.min_objects:
            raise ConfigInvalid("max_objects must be >= min_objects")
        if self.fps <= 0:
            raise ConfigInvalid("fps must be positive")
        lo, hi = self.clip_len_s
        if not 0 < lo <= hi:
            raise ConfigInvalid("clip_len_s must be an increasing positive range")
        if self.hold_s[0] < self.dwell_min_s:
            raise ConfigInvalid("hold_s lower bound must cover dwell_min_s")
        if not 1 <= self.max_gestures <= 3:
            raise ConfigInvalid("max_gestures must be 1..3")
        if self.jitter_deg < 0 or self.conf_noise < 0:
            raise ConfigInvalid("noise magnitudes must be non-negative")
        for name in ("multi_gesture_prob", "hand_dropout_prob", "drift_prob", "duplicate_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigInvalid(f"{name} must be a probability")
        return self

    def noiseless(self) -> "GenConfig":
        """Copy with tremor and confidence noise switched off."""
        return replace(self, jitter_deg=0.0, conf_noise=0.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GestureSpec:
    target_id: str
    hold_start: int
    hold_end: int
    approach_frames: int = 0

    def __post_init__(self):
        if self.hold_start >= self.hold_end:
            raise ValueError("hold_start must precede hold_end")
        if self.approach_frames < 0:
            raise ValueError("approach_frames must be >= 0")

    @property
    def hold_frames(self) -> int:
        return self.hold_end - self.hold_start + 1

    def to_dict(self) -> dict:
        return {
            "target_id": self.target_id,
            "hold_start": self.hold_start,
            "hold_end": self.hold_end,
            "approach_frames": self.approach_frames,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GestureSpec":
        return cls(d["target_id"], int(d["hold_start"]), int(d["hold_end"]), int(d.get("approach_frames", 0)))


@dataclass(frozen=True, eq=False)
class ClipRecord:
    clip_id: str
    scene: Scene
    camera_track: tuple
    hand_track: HandTrack
    gestures: tuple
    fps: float
    n_frames: int
    rng_seed: int

    def __post_init__(self):
        object.__setattr__(self, "camera_track", tuple(self.camera_track))
        object.__setattr__(self, "gestures", tuple(self.gestures))
        if len(self.camera_track) != self.n_frames:
            raise ValueError("camera_track length must equal n_frames")
        for g in self.gestures:
            if g.target_id not in self.scene:
                raise ValueError(f"gesture target {g.target_id} missing from scene")
        for a, b in zip(self.gestures, self.gestures[1:]):
            if b.hold_start <= a.hold_end:
                raise ValueError("gestures must be time-ordered and non-overlapping")

    @property
    def referents(self) -> list:
        return [g.target_id for g in self.gestures]

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "rng_seed": self.rng_seed,
            "fps": self.fps,
            "n_frames": self.n_frames,
            "scene": self.scene.to_dict(),
            "camera_track": [c.to_dict() for c in self.camera_track],
            "hand_track": [p.to_dict() for p in self.hand_track],
            "gestures": [g.to_dict() for g in self.gestures],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClipRecord":
        fps = float(d["fps"])
        return cls(
            clip_id=d["clip_id"],
            scene=Scene.from_dict(d["scene"]),
            camera_track=tuple(CameraPose.from_dict(c) for c in d["camera_track"]),
            hand_track=HandTrack(tuple(HandPose.from_dict(p) for p in d["hand_track"]), fps),
            gestures=tuple(GestureSpec.from_dict(g) for g in d["gestures"]),
            fps=fps,
            n_frames=int(d["n_frames"]),
            rng_seed=int(d["rng_seed"]),
        )


# ---------------------------------------------------------------- scenes


def sample_scene(seed: int, config: GenConfig = GenConfig()) -> Scene:
    """Desk scene of non-overlapping objects resting on a table plane."""
    config.validate()
    rng = derive_rng(seed, _SCENE)
    voc = vocab.vocabulary()["categories"]
    names = sorted(voc)
    n = int(rng.integers(config.min_objects, config.max_objects + 1))
    chosen: list = []
    used_colors: dict = {}
    for _ in range(n):
        if chosen and rng.random() < config.duplicate_prob:
            cat = chosen[int(rng.integers(len(chosen)))][0]
        else:
            cat = names[int(rng.integers(len(names)))]
        free = [c for c in voc[cat]["colors"] if c not in used_colors.get(cat, ())]
        if not free:
            cat = next(c for c in names if c not in used_colors)
            free = list(voc[cat]["colors"])
        attrs = {"color": free[int(rng.integers(len(free)))]}
        used_colors.setdefault(cat, set()).add(attrs["color"])
        for attr in ("material", "shape", "state"):
            vals = voc[cat][attr]
            attrs[attr] = vals[int(rng.integers(len(vals)))]
        chosen.append((cat, attrs))
    footprints: list = []
    objects = []
    for i, (cat, attrs) in enumerate(chosen):
        size_rng = voc[cat]["size"]
        size = [float(rng.uniform(lo, hi)) for lo, hi in size_rng]
        if rng.random() < 0.5:
            size[0], size[2] = size[2], size[0]
        for _attempt in range(400):
            x = float(rng.uniform(config.desk_x[0] + size[0] / 2, config.desk_x[1] - size[0] / 2))
            z = float(rng.uniform(config.desk_z[0] + size[2] / 2, config.desk_z[1] - size[2] / 2))
            fp = (x - size[0] / 2, z - size[2] / 2, x + size[0] / 2, z + size[2] / 2)
            c = config.clearance
            if all(fp[2] + c <= o[0] or o[2] + c <= fp[0] or fp[3] + c <= o[1] or o[3] + c <= fp[1] for o in footprints):
                break
        else:
            continue
        footprints.append(fp)
        box = Aabb(
            Vec3(fp[0], config.table_y - size[1], fp[1]),
            Vec3(fp[2], config.table_y, fp[3]),
        )
        objects.append(SceneObject(id=f"{cat}_{i}", category=cat, attributes=attrs, bounds=box))
    if len(objects) < 3:
        raise ConfigInvalid("desk too crowded to place three objects")
    return Scene(scene_id=f"scene-{seed}", objects=tuple(objects), rng_seed=int(seed))


# ---------------------------------------------------------------- viewpoint and targets


def _visible_count(scene: Scene, camera: CameraPose, threshold: float, grid: int) -> int:
    return sum(visible_fraction(o, camera, scene.others(o.id), grid) > threshold for o in scene.objects)


def sample_viewpoint(scene: Scene, seed: int, config: GenConfig = GenConfig()) -> CameraPose:
    """Head-mounted camera looking down at the desk with at least three objects in view."""
    rng = derive_rng(seed, _VIEW)
    cx = 0.5 * (config.desk_x[0] + config.desk_x[1])
    cz = 0.5 * (config.desk_z[0] + config.desk_z[1])
    for _ in range(config.viewpoint_attempts):
        eye = rng.uniform(-0.05, 0.05, size=3)
        look = (cx + rng.uniform(-0.2, 0.2), config.table_y + rng.uniform(-0.1, 0.05), cz + rng.uniform(-0.2, 0.2))
        cam = look_at(eye, look)
        if _visible_count(scene, cam, config.min_visible_fraction, config.grid) >= config.min_visible_objects:
            return cam
    raise NoValidViewpoint(
        f"no viewpoint with {config.min_visible_objects} visible objects after {config.viewpoint_attempts} attempts"
    )


def eligible_targets(scene: Scene, camera: CameraPose, config: GenConfig = GenConfig()) -> list:
    """Ids of objects visible above threshold whose centroid lies within reach depth."""
    out = []
    for o in scene.objects:
        depth = camera.to_camera(o.centroid).z
        if not 0.0 < depth < config.max_target_depth:
            continue
        if visible_fraction(o, camera, scene.others(o.id), config.grid) > config.min_visible_fraction:
            out.append(o.id)
    return out


def select_targets(scene: Scene, camera: CameraPose, seed: int, k: int = 1, config: GenConfig = GenConfig()) -> list:
    """``k`` distinct eligible targets drawn uniformly without replacement."""
    pool = eligible_targets(scene, camera, config)
    if len(pool) < k:
        raise NoEligibleTarget(f"{len(pool)} eligible objects, {k} needed")
    rng = derive_rng(seed, _TARGET)
    picks = rng.choice(len(pool), size=k, replace=False)
    return [pool[int(i)] for i in picks]


def select_target(scene: Scene, camera: CameraPose, seed: int, config: GenConfig = GenConfig()) -> str:
    return select_targets(scene, camera, seed, 1, config)[0]


# ---------------------------------------------------------------- hand motion

_INDEX_LEN = 0.087  # MCP to fingertip along the extended index finger
DEFAULT_REST = (np.array([0.10, 0.18, 0.35]), np.array([0.1, 0.9, 0.35]) / np.linalg.norm([0.1, 0.9, 0.35]))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _slerp(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    cos = float(np.clip(np.dot(a, b), -1.0, 1.0))
    ang = math.acos(cos)
    if ang < 1e-9:
        return b.copy()
    return _unit((math.sin((1 - s) * ang) * a + math.sin(s * ang) * b) / math.sin(ang))


def _smooth(s: float) -> float:
    return s * s * (3.0 - 2.0 * s)


def _in_margin(camera: CameraPose, p: np.ndarray, margin: float) -> bool:
    if p[2] <= 1e-6:
        return False
    u = camera.cx + camera.fx * p[0] / p[2]
    v = camera.cy + camera.fy * p[1] / p[2]
    return margin <= u <= camera.width - margin and margin <= v <= camera.height - margin


def _check_dwell(spec: GestureSpec, config: GenConfig) -> None:
    need = int(math.ceil(config.dwell_min_s * config.fps - 1e-9))
    if spec.hold_frames < need:
        raise ConfigInvalid(f"hold of {spec.hold_frames} frames shorter than dwell minimum {need}")


def plan_gesture(
    scene: Scene,
    camera_track: Sequence[CameraPose],
    spec: GestureSpec,
    seed: int,
    config: GenConfig = GenConfig(),
    rest: Optional[tuple] = None,
) -> tuple:
    """Fingertip positions and unit pointing directions (camera space) for the approach and hold frames.

    Returns ``(first_frame, tips, dirs)`` with one row per frame from
    ``hold_start - approach_frames`` to ``hold_end`` inclusive.
    """
    if spec.target_id not in scene:
        raise ValueError(f"unknown target {spec.target_id}")
    if spec.hold_end >= len(camera_track) or spec.hold_start - spec.approach_frames < 0:
        raise ValueError("camera_track does not cover the gesture frames")
    _check_dwell(spec, config)
    rest_tip, rest_dir = rest if rest is not None else DEFAULT_REST
    target = scene.get(spec.target_id)
    rng = derive_rng(seed, _GESTURE)
    cams = camera_track[spec.hold_start: spec.hold_end + 1]
    world = np.array([target.centroid] + [o.centroid for o in scene.objects if o.id != spec.target_id])
    local = np.stack([(world - np.asarray(c.position)) @ c.cam_to_world for c in cams])
    cents = local[:, 0]
    if np.any(cents[:, 2] <= 0.0):
        raise UnreachableTarget(f"{spec.target_id} lies behind the camera")
    margin = config.edge_margin_px
    other_cents = local[:, 1:]
    # other centroids must sit well outside the tremor cone so the target stays the unique best match
    min_sep = math.cos(math.radians(2.0 * config.jitter_deg + config.separation_deg))
    for _ in range(config.placement_attempts):
        tip = np.array([rng.uniform(-0.05, 0.25), rng.uniform(0.10, 0.30), rng.uniform(0.30, 0.60)])
        if np.any(cents[:, 2] < tip[2] + 0.1):
            continue
        dirs = cents - tip
        dists = np.linalg.norm(dirs, axis=1)
        dirs = dirs / dists[:, None]
        if np.any(dirs[:, 2] < 0.15):
            continue
        if other_cents.shape[1]:
            rel = other_cents - tip
            cos = np.einsum("fkj,fj->fk", rel, dirs) / np.linalg.norm(rel, axis=2)
            if np.any(cos > min_sep):
                continue
        if all(_in_margin(c, tip, margin) and _in_margin(c, tip - _INDEX_LEN * d, margin) for c, d in zip(cams, dirs)):
            break
    else:
        raise UnreachableTarget(f"no hand placement points at {spec.target_id}")

    # bounded tremor: the ray never strays further than 0.8 of the inscribed radius from the centroid
    box = target.bounds
    r_in = 0.5 * min(box.extent)
    limit = math.radians(config.jitter_deg)
    f1, f2 = rng.uniform(3.0, 7.0, size=2)
    p1, p2 = rng.uniform(0.0, 2 * math.pi, size=2)
    hold = np.empty_like(dirs)
    for i, (cam, d, dist) in enumerate(zip(cams, dirs, dists)):
        amp = min(limit, 0.8 * math.atan(r_in / dist))
        t = i / config.fps
        a1 = amp * math.sin(2 * math.pi * f1 * t + p1) / math.sqrt(2.0)
        a2 = amp * math.sin(2 * math.pi * f2 * t + p2) / math.sqrt(2.0)
        theta = math.hypot(a1, a2)
        jd = d
        if theta > 0.0:
            side, down = hand_frame(d)
            e = (a1 * side + a2 * down) / theta
            jd = _unit(math.cos(theta) * d + math.sin(theta) * e)
            ray = Ray(cam.to_world(tip), _unit(np.asarray(cam.direction_to_world(jd))))
            if ray_aabb_intersect(ray, box) is None:
                jd = d
        hold[i] = jd

    n_app = spec.approach_frames
    tips = np.empty((n_app + len(hold), 3))
    out_dirs = np.empty_like(tips)
    for i in range(n_app):
        s = _smooth((i + 1) / (n_app + 1))
        tips[i] = (1 - s) * rest_tip + s * tip
        out_dirs[i] = _slerp(rest_dir, hold[0], s)
    tips[n_app:] = tip
    out_dirs[n_app:] = hold
    return spec.hold_start - n_app, tips, out_dirs


def synthetic_confidence(
    tips: np.ndarray,
    dirs: np.ndarray,
    cameras: Sequence[CameraPose],
    rng: np.random.Generator,
    config: GenConfig = GenConfig(),
    prev_dir: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Detector-confidence surrogate that drops with angular speed and proximity to the image border."""
    n = len(tips)
    omega = np.zeros(n)
    prev = dirs[0] if prev_dir is None else prev_dir
    for t in range(n):
        cos = float(np.clip(np.dot(prev, dirs[t]), -1.0, 1.0))
        omega[t] = math.degrees(math.acos(cos)) * config.fps
        prev = dirs[t]
    edge = np.zeros(n)
    m = config.edge_margin_px
    for t, cam in enumerate(cameras):
        worst = 0.0
        for p in (tips[t], tips[t] - _INDEX_LEN * dirs[t]):
            if p[2] <= 1e-6:
                worst = 1.0
                break
            u = cam.cx + cam.fx * p[0] / p[2]
            v = cam.cy + cam.fy * p[1] / p[2]
            border = min(u, cam.width - u, v, cam.height - v)
            worst = max(worst, min(1.0, max(0.0, (m - border) / m)))
        edge[t] = worst
    noise = rng.normal(0.0, config.conf_noise, size=n) if config.conf_noise > 0 else np.zeros(n)
    return np.clip(config.conf_base - config.conf_lambda * omega - config.conf_mu * edge + noise, 0.0, 1.0)


def synthesize_gesture(
    scene: Scene,
    camera_track: Sequence[CameraPose],
    spec: GestureSpec,
    seed: int,
    config: GenConfig = GenConfig(),
    rest: Optional[tuple] = None,
) -> HandTrack:
    """Hand track segment covering the approach and hold of one pointing gesture."""
    first, tips, dirs = plan_gesture(scene, camera_track, spec, seed, config, rest)
    cams = camera_track[first: first + len(tips)]
    rest_dir = (rest if rest is not None else DEFAULT_REST)[1]
    conf = synthetic_confidence(tips, dirs, cams, derive_rng(seed, _CONF), config, prev_dir=rest_dir)
    poses = tuple(HandPose(build_hand(tips[i], dirs[i]), float(conf[i]), first + i) for i in range(len(tips)))
    return HandTrack(poses, config.fps)


# ---------------------------------------------------------------- camera motion


def _axis_rot(axis: int, ang: float) -> np.ndarray:
    c, s = math.cos(ang), math.sin(ang)
    if axis == 0:
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def camera_track(
    base: CameraPose,
    n_frames: int,
    rng: np.random.Generator,
    config: GenConfig = GenConfig(),
    drift: Optional[tuple] = None,
) -> tuple:
    """Per-frame poses with slight head sway; ``drift=(start_frame, yaw_deg)`` turns the head away."""
    amp_yaw, amp_pitch = np.radians(rng.uniform(0.15, 0.5, size=2))
    f_yaw, f_pitch = rng.uniform(0.1, 0.4, size=2)
    ph = rng.uniform(0.0, 2 * math.pi, size=5)
    amp_pos = rng.uniform(0.0, 0.005, size=3)
    rot0 = base.cam_to_world
    pos0 = np.asarray(base.position)
    out = []
    for t in range(n_frames):
        s = t / config.fps
        yaw = amp_yaw * math.sin(2 * math.pi * f_yaw * s + ph[0])
        pitch = amp_pitch * math.sin(2 * math.pi * f_pitch * s + ph[1])
        if drift is not None and t >= drift[0]:
            ramp = min(1.0, (t - drift[0]) / (0.5 * config.fps))
            yaw += math.radians(drift[1]) * _smooth(ramp)
        rot = rot0 @ _axis_rot(1, yaw) @ _axis_rot(0, pitch)
        pos = pos0 + amp_pos * np.sin(2 * math.pi * 0.3 * s + ph[2:])
        out.append(base.with_pose(Vec3(*(float(c) for c in pos)), quat_from_matrix(rot)))
    return tuple(out)


# ---------------------------------------------------------------- clips


def _frames(rng: np.random.Generator, span: tuple, fps: float) -> int:
    return int(round(rng.uniform(*span) * fps))


def generate_clip(seed: int, config: GenConfig = GenConfig(), clip_id: Optional[str] = None) -> ClipRecord:
    """One synthetic clip; raises the generation error when any stage cannot be satisfied."""
    config.validate()
    fps = config.fps
    scene = sample_scene(seed, config)
    base = sample_viewpoint(scene, seed, config)
    rng = derive_rng(seed, _CLIP)
    k = 1
    if config.max_gestures > 1 and rng.random() < config.multi_gesture_prob:
        k = int(rng.integers(2, config.max_gestures + 1))
    pool = eligible_targets(scene, base, config)
    if not pool:
        raise NoEligibleTarget("no eligible target in view")
    targets = select_targets(scene, base, seed, min(k, len(pool)), config)

    need = int(math.ceil(config.dwell_min_s * fps - 1e-9))
    cursor = _frames(rng, config.lead_s, fps)
    plan = []
    for i, tid in enumerate(targets):
        app = max(1, _frames(rng, config.approach_s, fps))
        if i:
            cursor += max(0, int(math.ceil(config.gap_min_s * fps)) - plan[-1][3] - app)
        start = cursor + app
        hold = max(need, _frames(rng, config.hold_s, fps))
        ret = max(1, _frames(rng, config.retract_s, fps))
        plan.append((tid, app, start, ret, hold))
        cursor = start + hold + ret
    gestures = [GestureSpec(tid, start, start + hold - 1, app) for tid, app, start, ret, hold in plan]
    n_frames = max(cursor + _frames(rng, (0.2, 0.6), fps), int(round(rng.uniform(*config.clip_len_s) * fps)))

    dropout = rng.random() < config.hand_dropout_prob
    drift = rng.random() < config.drift_prob
    tail_from = cursor
    if dropout or drift:
        # tail long enough that the injected failure is a sizeable share of the clip
        share = rng.uniform(0.3, 0.65)
        n_frames = max(n_frames, int(math.ceil(tail_from / (1.0 - share))))
    drift_spec = (tail_from, float(rng.choice([-1.0, 1.0]) * rng.uniform(55.0, 80.0))) if drift else None
    track = camera_track(base, n_frames, rng, config, drift_spec)

    rest_tip = np.array([rng.uniform(0.06, 0.14), rng.uniform(0.15, 0.20), rng.uniform(0.32, 0.38)])
    rest_dir = _unit(np.array([rng.uniform(0.0, 0.15), 0.9, rng.uniform(0.3, 0.4)]))
    tips = np.tile(rest_tip, (n_frames, 1))
    dirs = np.tile(rest_dir, (n_frames, 1))
    for gi, (g, (_, _, _, ret, _)) in enumerate(zip(gestures, plan)):
        first, gt, gd = plan_gesture(scene, track, g, derive_seed(seed, _GESTURE, gi), config, (rest_tip, rest_dir))
        tips[first: first + len(gt)] = gt
        dirs[first: first + len(gd)] = gd
        for j in range(ret):
            s = _smooth((j + 1) / (ret + 1))
            tips[g.hold_end + 1 + j] = (1 - s) * gt[-1] + s * rest_tip
            dirs[g.hold_end + 1 + j] = _slerp(gd[-1], rest_dir, s)
    if dropout:
        # hand leaves the field of view below the image
        tips[tail_from:] = tips[tail_from:] + np.array([0.0, 0.45, 0.0])
    conf = synthetic_confidence(tips, dirs, track, derive_rng(seed, _CONF), config)
    poses = tuple(HandPose(build_hand(tips[t], dirs[t]), float(conf[t]), t) for t in range(n_frames))
    return ClipRecord(
        clip_id=clip_id or f"clip-{seed}",
        scene=scene,
        camera_track=track,
        hand_track=HandTrack(poses, fps),
        gestures=tuple(gestures),
        fps=fps,
        n_frames=n_frames,
        rng_seed=int(seed),
    )


# ---------------------------------------------------------------- quality filter


@dataclass(frozen=True)
class FilterResult:
    accept: bool
    reasons: tuple
    target_fractions: dict
    hand_fraction: float

    def __bool__(self) -> bool:
        return self.accept


def target_visibility(clip: ClipRecord, target_id: str, grid: int = 8) -> np.ndarray:
    """Per-frame visible fraction of one object along the clip's camera track."""
    from . import kernels
    from .scene import surface_samples

    obj = clip.scene.get(target_id)
    pts = surface_samples(obj.bounds, grid)
    occ = np.array([o.bounds.as_row() for o in clip.scene.others(target_id)], dtype=np.float64).reshape(-1, 6)
    out = np.empty(clip.n_frames)
    for t, cam in enumerate(clip.camera_track):
        out[t] = kernels.count_visible(pts, cam.position, cam.world_to_cam, cam.intrinsics, occ) / len(pts)
    return out


def quality_filter(
    clip: ClipRecord,
    target_min: float = 0.5,
    hand_min: float = 0.6,
    tau_hand_visible: float = 0.5,
    grid: int = 8,
) -> FilterResult:
    """Accept when each target is visible in at least ``target_min`` of frames and the hand is
    confidently detected in more than ``hand_min`` of frames."""
    reasons = []
    fractions = {}
    for g in clip.gestures:
        vis = target_visibility(clip, g.target_id, grid)
        fractions[g.target_id] = float(np.count_nonzero(vis > 0.0)) / clip.n_frames
    if any(f < target_min for f in fractions.values()):
        reasons.append("target-visibility")
    confident = sum(p.confidence >= tau_hand_visible for p in clip.hand_track)
    hand = float(confident) / clip.n_frames
    if not hand > hand_min:
        reasons.append("hand-visibility")
    return FilterResult(not reasons, tuple(reasons), fractions, hand)


# ---------------------------------------------------------------- batch forging


@dataclass
class ForgeResult:
    clips: list
    rejects: list  # (clip_id, reason)
    attempts: int

    @property
    def acceptance_rate(self) -> float:
        return len(self.clips) / self.attempts if self.attempts else 0.0


def forge_attempt(seed: int, index: int, config: GenConfig) -> tuple:
    """``(clip_id, clip or None, reason)`` for attempt ``index`` of a batch."""
    clip_id = f"clip-{seed}-{index:05d}"
    try:
        clip = generate_clip(derive_seed(seed, index), config, clip_id)
    except (NoValidViewpoint, NoEligibleTarget, UnreachableTarget) as exc:
        return clip_id, None, f"{type(exc).__name__}: {exc}"
    verdict = quality_filter(clip)
    if not verdict:
        return clip_id, None, ",".join(verdict.reasons)
    return clip_id, clip, ""


def _attempt_star(args):
    return forge_attempt(*args)


def forge_clips(
    seed: int,
    n_clips: int,
    config: GenConfig = GenConfig(),
    jobs: int = 1,
    max_attempts: Optional[int] = None,
) -> ForgeResult:
    """Generate and filter clips until ``n_clips`` are accepted.

    Attempts are numbered, so the accepted set depends only on ``seed`` and
    ``config`` no matter how many workers run them.
    """
    config.validate()
    if n_clips < 0:
        raise ConfigInvalid("n_clips must be non-negative")
    limit = max_attempts if max_attempts is not None else max(10, 4 * n_clips)
    out = ForgeResult([], [], 0)
    pool = None
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        pool = ProcessPoolExecutor(max_workers=jobs)
    try:
        nxt = 0
        while len(out.clips) < n_clips and nxt < limit:
            want = n_clips - len(out.clips)
            chunk = range(nxt, min(limit, nxt + max(want + want // 4 + 1, jobs)))
            args = [(seed, i, config) for i in chunk]
            results = pool.map(_attempt_star, args, chunksize=4) if pool else map(_attempt_star, args)
            for clip_id, clip, reason in results:
                if len(out.clips) == n_clips:
                    break
                out.attempts += 1
                if clip is None:
                    out.rejects.append((clip_id, reason))
                else:
                    out.clips.append(clip)
            nxt = chunk.stop
    finally:
        if pool is not None:
            pool.shutdown()
    return out
