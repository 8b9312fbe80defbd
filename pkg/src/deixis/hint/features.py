"""Desk-scale token stubs for the toy scorer.

Each visible object becomes one visual row: a hashed word vector for its
category and attributes, followed by radial-basis features of its projected
image position. Options and question words live in the same hashed space.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ..evaluation.sampling import frame_sample
from ..qa.item import QAItem
from ..scene import project_point
from ..synth import ClipRecord
from .adapter import ABSENT, GateConfig, HandIntentToken
from .sequence import InterleavedSequence, VisualTokenBlock, interleave

_STOP = frozenset({"the", "a", "an", "of", "is", "this", "it", "what", "kind", "object"})
_WORD_RE = re.compile(r"[a-z0-9-]+")


@dataclass(frozen=True)
class FeatureConfig:
    d_word: int = 32
    grid: int = 6
    sigma: float = 0.2
    n_vis: int = 8
    n_frames: int = 8
    attribute_weight: float = 0.5

    @property
    def d(self) -> int:
        return self.d_word + self.grid * self.grid


@lru_cache(maxsize=4096)
def _word_vector(word: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest(), "little")
    v = np.random.default_rng(seed).normal(size=dim)
    v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


def words(text: str) -> list:
    return [w for w in _WORD_RE.findall(text.lower()) if w not in _STOP]


def text_embedding(text: str, config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Unit-norm mean of hashed word vectors, zero in the position block."""
    out = np.zeros(config.d)
    ws = words(text)
    if ws:
        v = sum(_word_vector(w, config.d_word) for w in ws)
        n = np.linalg.norm(v)
        out[: config.d_word] = v / n if n > 0 else v
    return out


def position_features(u: float, v: float, config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Gaussian bumps on a grid over normalized image coordinates."""
    c = (np.arange(config.grid) + 0.5) / config.grid
    gu = np.exp(-0.5 * ((u - c) / config.sigma) ** 2)
    gv = np.exp(-0.5 * ((v - c) / config.sigma) ** 2)
    return np.outer(gv, gu).ravel()


def object_row(obj, camera, config: FeatureConfig = FeatureConfig()):
    """Visual row for one object, or None when it projects outside the frame."""
    if camera.to_camera(obj.centroid).z <= 0:
        return None
    u, v, _ = project_point(camera, obj.centroid)
    if not (0 <= u < camera.width and 0 <= v < camera.height):
        return None
    content = _word_vector(obj.category, config.d_word) + _word_vector(obj.attributes["color"], config.d_word)
    for attr, value in sorted(obj.attributes.items()):
        if attr != "color":
            content = content + config.attribute_weight * _word_vector(value, config.d_word)
    content = content / np.linalg.norm(content)
    return np.concatenate([content, position_features(u / camera.width, v / camera.height, config)])


def visual_block(clip: ClipRecord, frame: int, config: FeatureConfig = FeatureConfig()) -> VisualTokenBlock:
    camera = clip.camera_track[frame]
    rows = [r for r in (object_row(o, camera, config) for o in clip.scene.objects) if r is not None]
    tokens = np.zeros((config.n_vis, config.d))
    if rows:
        tokens[: min(len(rows), config.n_vis)] = rows[: config.n_vis]
    return VisualTokenBlock(frame, tokens)


def hand_token(clip: ClipRecord, frame: int, gate: GateConfig) -> HandIntentToken:
    """Gate on the detector confidence; the toy scorer encodes the recorded keypoints itself."""
    pose = clip.hand_track.poses[frame]
    if not gate.open(pose.confidence):
        return ABSENT
    return HandIntentToken(np.zeros(1), pose.keypoints)


def item_sequence(
    item: QAItem,
    clip: ClipRecord,
    gate: GateConfig = GateConfig(),
    config: FeatureConfig = FeatureConfig(),
    with_hand: bool = True,
) -> InterleavedSequence:
    frames = frame_sample(clip, config.n_frames)
    blocks = [visual_block(clip, f, config) for f in frames]
    hands = [hand_token(clip, f, gate) if with_hand else ABSENT for f in frames]
    question = [text_embedding(w, config) for w in words(item.question)]
    return interleave(question, blocks, hands, answer_tokens=[np.zeros(config.d)])


def option_matrix(item: QAItem, config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    return np.stack([text_embedding(o, config) for o in item.options])


def training_items(
    items: Iterable[QAItem],
    clips: dict,
    gate: GateConfig = GateConfig(),
    config: FeatureConfig = FeatureConfig(),
    with_hand: bool = True,
) -> list:
    """``(sequence, options, answer_index)`` triples ready for packing."""
    return [
        (item_sequence(it, clips[it.clip_id], gate, config, with_hand), option_matrix(it, config), it.answer_index)
        for it in items
    ]


def split_by_clip(items: Sequence[QAItem], test_fraction: float, seed: int) -> tuple:
    """Held-out split on whole clips so no scene appears on both sides."""
    clip_ids = sorted({it.clip_id for it in items})
    rng = np.random.default_rng(seed)
    order = [clip_ids[i] for i in rng.permutation(len(clip_ids))]
    n_test = max(1, int(round(test_fraction * len(order))))
    test_ids = set(order[:n_test])
    train = [it for it in items if it.clip_id not in test_ids]
    test = [it for it in items if it.clip_id in test_ids]
    return train, test
