"""21-landmark hand skeleton with an extended index finger.

Layout: 0 wrist, 1-4 thumb, 5-8 index (8 = fingertip), 9-12 middle,
13-16 ring, 17-20 pinky.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_KEYPOINTS = 21
WRIST, INDEX_MCP, INDEX_TIP = 0, 5, 8

# index phalanx lengths MCP->PIP->DIP->TIP, metres
_INDEX = (0.040, 0.025, 0.022)
_UP = np.array([0.0, -1.0, 0.0])


@dataclass(frozen=True, eq=False)
class HandPose:
    keypoints: np.ndarray
    confidence: float
    frame_index: int

    def __post_init__(self):
        k = np.array(self.keypoints, dtype=np.float64).reshape(-1, 3)
        if k.shape != (N_KEYPOINTS, 3):
            raise ValueError(f"expected 21x3 keypoints, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValueError("keypoints must be finite")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.frame_index < 0:
            raise ValueError("frame_index must be >= 0")
        k.setflags(write=False)
        object.__setattr__(self, "keypoints", k)
        object.__setattr__(self, "confidence", float(self.confidence))

    def to_dict(self) -> dict:
        return {"frame": self.frame_index, "confidence": self.confidence, "keypoints": self.keypoints.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "HandPose":
        return cls(np.asarray(d["keypoints"], dtype=np.float64), d["confidence"], int(d["frame"]))


@dataclass(frozen=True, eq=False)
class HandTrack:
    poses: tuple = field(default_factory=tuple)
    fps: float = 30.0

    def __post_init__(self):
        poses = tuple(self.poses)
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        frames = [p.frame_index for p in poses]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("frame indices must be strictly increasing")
        object.__setattr__(self, "poses", poses)

    def __len__(self):
        return len(self.poses)

    def __iter__(self):
        return iter(self.poses)


def _cross(a, b) -> np.ndarray:
    # np.cross carries heavy dispatch overhead for single 3-vectors
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def hand_frame(direction) -> tuple:
    """Orthonormal (side, down) axes for a hand pointing along ``direction``."""
    d = np.asarray(direction, dtype=np.float64)
    side = _cross(d, _UP)
    if side @ side < 1e-12:
        side = _cross(d, (0.0, 0.0, 1.0))
    side /= np.sqrt(side @ side)
    down = _cross(d, side)
    return side, down


def _template() -> np.ndarray:
    """Keypoint coefficients over the (direction, side, down) basis, fingertip at the origin."""
    d, side, down = np.eye(3)
    k = np.zeros((N_KEYPOINTS, 3))
    k[7] = -_INDEX[2] * d
    k[6] = k[7] - _INDEX[1] * d
    k[5] = k[6] - _INDEX[0] * d
    k[0] = k[5] - 0.080 * d + 0.030 * down + 0.020 * side
    # curled middle, ring and pinky fingers
    for base, offset, back in ((9, 0.020, 0.000), (13, 0.038, 0.005), (17, 0.054, 0.014)):
        mcp = k[5] + offset * side - back * d + 0.004 * down
        pip = mcp + 0.026 * (0.35 * d + 0.94 * down)
        dip = pip + 0.020 * (-0.55 * d + 0.83 * down)
        tipf = dip + 0.017 * (-0.95 * d + 0.30 * down)
        k[base:base + 4] = (mcp, pip, dip, tipf)
    # thumb tucked along the inner side
    k[1] = k[0] - 0.022 * side + 0.020 * d
    k[2] = k[1] - 0.018 * side + 0.026 * d
    k[3] = k[2] + 0.024 * (0.80 * d + 0.45 * down)
    k[4] = k[3] + 0.020 * (0.55 * d + 0.60 * down + 0.55 * side)
    return k


_TEMPLATE = _template()


def build_hand(fingertip, direction) -> np.ndarray:
    """Right-hand skeleton whose index finger lies exactly on the ray through ``fingertip``."""
    tip = np.asarray(fingertip, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.sqrt(d @ d)
    side, down = hand_frame(d)
    return tip + _TEMPLATE @ np.stack([d, side, down])
