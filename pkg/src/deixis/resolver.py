"""Geometric pointing resolution: which object a hand track designates, and when.

Hand keypoints live in camera space while scene boxes live in world space, so
every scoring call accepts the frame's camera pose. Without one the two frames
are taken to coincide.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import ConfigInvalid, DegeneratePose
from .hand import INDEX_MCP, INDEX_TIP, HandPose, HandTrack
from .scene import CameraPose, Ray, Scene

_MIN_FINGER = 1e-6


@dataclass(frozen=True)
class ResolverConfig:
    conf_threshold: float = 0.5
    dwell_min_s: float = 1.0
    angle_max: float = 15.0

    def __post_init__(self):
        if not 0.0 <= self.conf_threshold <= 1.0:
            raise ConfigInvalid("conf_threshold must lie in [0, 1]")
        if self.dwell_min_s < 0:
            raise ConfigInvalid("dwell_min_s must be non-negative")
        if not 0.0 < self.angle_max <= 180.0:
            raise ConfigInvalid("angle_max must lie in (0, 180]")


@dataclass(frozen=True)
class GestureEvent:
    start_frame: int
    end_frame: int
    referent_id: str
    mean_score: float

    def __post_init__(self):
        if self.start_frame >= self.end_frame:
            raise ValueError("start_frame must precede end_frame")

    def to_dict(self) -> dict:
        return {
            "referent_id": self.referent_id,
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
            "mean_score": self.mean_score,
        }


def pointing_ray(pose: HandPose) -> Ray:
    """Half-line from the index fingertip along the MCP-to-tip direction, in camera space."""
    k = pose.keypoints
    d = k[INDEX_TIP] - k[INDEX_MCP]
    n = math.sqrt(float(d @ d))
    if n < _MIN_FINGER:
        raise DegeneratePose(f"frame {pose.frame_index}: index MCP and fingertip coincide")
    return Ray(tuple(k[INDEX_TIP]), tuple(d / n))


def _world_ray(pose: HandPose, camera: Optional[CameraPose]) -> tuple:
    ray = pointing_ray(pose)
    o = np.asarray(ray.origin)
    d = np.asarray(ray.direction)
    if camera is not None:
        o = camera.cam_to_world @ o + np.asarray(camera.position)
        d = camera.cam_to_world @ d
        d = d / math.sqrt(float(d @ d))
    return o, d


def _frame_geometry(pose: HandPose, scene: Scene, camera: Optional[CameraPose], boxes: np.ndarray, cents: np.ndarray):
    o, d = _world_ray(pose, camera)
    rel = cents - o
    dist = np.sqrt(np.einsum("ij,ij->i", rel, rel))
    along = rel @ d
    cos = np.where(dist > 0, along / np.where(dist > 0, dist, 1.0), 1.0)
    t_hit = kernels.ray_boxes(o, d, boxes)
    score = cos + np.where(np.isnan(t_hit), 0.0, 1.0)
    score = np.where(along >= 0.0, score, -np.inf)
    return score, cos, t_hit, along


def score_frame(pose: HandPose, scene: Scene, camera: Optional[CameraPose] = None) -> dict:
    """Per-object score: cosine to the centroid plus 1 when the ray enters the box; -inf behind the fingertip."""
    boxes = scene.boxes()
    cents = np.array([o.centroid for o in scene.objects])
    score, _, _, _ = _frame_geometry(pose, scene, camera, boxes, cents)
    return {o.id: float(s) for o, s in zip(scene.objects, score)}


def _best(score: np.ndarray, t_hit: np.ndarray, along: np.ndarray) -> int:
    top = score.max()
    if not np.isfinite(top):
        return -1
    tied = np.flatnonzero(score == top)
    if len(tied) == 1:
        return int(tied[0])
    # nearest entry point along the ray, falling back to nearest centroid projection
    key = [(0 if not math.isnan(t_hit[i]) else 1, t_hit[i] if not math.isnan(t_hit[i]) else along[i], i) for i in tied]
    return min(key)[2]


def label_frames(
    track: HandTrack,
    scene: Scene,
    config: ResolverConfig = ResolverConfig(),
    camera_track: Optional[Sequence[CameraPose]] = None,
) -> list:
    """``(frame, label index, score, angle_deg)`` for every frame above the confidence threshold."""
    boxes = scene.boxes()
    cents = np.array([o.centroid for o in scene.objects])
    out = []
    for pose in track:
        if pose.confidence < config.conf_threshold:
            continue
        cam = camera_track[pose.frame_index] if camera_track is not None else None
        score, cos, t_hit, along = _frame_geometry(pose, scene, cam, boxes, cents)
        i = _best(score, t_hit, along)
        if i < 0:
            continue
        angle = math.degrees(math.acos(min(1.0, max(-1.0, float(cos[i])))))
        out.append((pose.frame_index, i, float(score[i]), angle))
    return out


def segment_gestures(
    track: HandTrack,
    scene: Scene,
    config: ResolverConfig = ResolverConfig(),
    camera_track: Optional[Sequence[CameraPose]] = None,
) -> list:
    """Dwell events: maximal runs of consecutive confident frames sharing one argmax object."""
    if len(track) == 0:
        raise ValueError("empty hand track")
    labels = label_frames(track, scene, config, camera_track)
    events = []
    run: list = []

    def close():
        if not run:
            return
        start, end = run[0][0], run[-1][0]
        duration = (end - start + 1) / track.fps
        mean_angle = sum(r[3] for r in run) / len(run)
        if end > start and duration >= config.dwell_min_s and mean_angle <= config.angle_max:
            mean_score = sum(r[2] for r in run) / len(run)
            events.append(GestureEvent(start, end, scene.objects[run[0][1]].id, mean_score))

    for rec in labels:
        if run and (rec[1] != run[-1][1] or rec[0] != run[-1][0] + 1):
            close()
            run = []
        run.append(rec)
    close()
    return events


def merge_events(events: Sequence[GestureEvent], fps: float, dwell_min_s: float) -> list:
    """Fuse consecutive events on the same referent separated by less than ``dwell_min_s``."""
    merged: list = []
    for ev in events:
        if merged and merged[-1].referent_id == ev.referent_id:
            prev = merged[-1]
            gap = (ev.start_frame - prev.end_frame - 1) / fps
            if gap < dwell_min_s:
                n_prev = prev.end_frame - prev.start_frame + 1
                n_ev = ev.end_frame - ev.start_frame + 1
                score = (prev.mean_score * n_prev + ev.mean_score * n_ev) / (n_prev + n_ev)
                merged[-1] = GestureEvent(prev.start_frame, ev.end_frame, ev.referent_id, score)
                continue
        merged.append(ev)
    return merged


def resolve_events(clip, config: ResolverConfig = ResolverConfig()) -> list:
    if len(clip.hand_track) == 0:
        return []
    events = segment_gestures(clip.hand_track, clip.scene, config, clip.camera_track)
    return merge_events(events, clip.fps, config.dwell_min_s)


def resolve_referents(clip, config: ResolverConfig = ResolverConfig()) -> list:
    """Time-ordered ``(referent_id, start_frame, end_frame)`` triples recovered from the hand track alone."""
    return [(e.referent_id, e.start_frame, e.end_frame) for e in resolve_events(clip, config)]


def referents_record(clip_id: str, events: Sequence[GestureEvent]) -> dict:
    return {"clip_id": clip_id, "events": [e.to_dict() for e in events]}
