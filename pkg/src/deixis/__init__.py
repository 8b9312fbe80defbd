"""Gesture-grounded desk-scale VQA: clip synthesis, pointing resolution, deictic QA,
hand-intent token kernels and multiple-choice evaluation."""
from .errors import DeixisError
from .kernels import BACKEND
from .resolver import GestureEvent, ResolverConfig, resolve_referents, segment_gestures
from .scene import Aabb, CameraPose, Scene, SceneObject, Vec3
from .synth import ClipRecord, GenConfig, forge_clips, generate_clip, quality_filter

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Aabb", "CameraPose", "ClipRecord", "DeixisError", "GenConfig", "GestureEvent",
    "ResolverConfig", "Scene", "SceneObject", "Vec3", "forge_clips", "generate_clip", "quality_filter",
    "resolve_referents", "segment_gestures",
]
