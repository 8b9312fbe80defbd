"""Confidence-threshold sweep: how many hand tokens survive the gate at each tau."""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..hint.adapter import AdapterParams, GateConfig, adapter_forward
from ..hint.sequence import KEY, VisualTokenBlock, interleave
from .sampling import frame_sample

DEFAULT_TAUS = (0.1, 0.3, 0.5, 0.7, 0.9)
N_EVAL_FRAMES = 32


def clip_key_count(clip, params: AdapterParams, tau: float, n_frames: int = N_EVAL_FRAMES, n_vis: int = 1) -> int:
    frames = frame_sample(clip, n_frames)
    gate = GateConfig(tau)
    blocks = [VisualTokenBlock(f, np.zeros((n_vis, params.d))) for f in frames]
    hands = [
        adapter_forward(params, clip.hand_track.poses[f].keypoints, clip.hand_track.poses[f].confidence, gate)
        for f in frames
    ]
    return interleave([], blocks, hands).count(KEY)


def tau_sweep(
    clips: Iterable,
    taus: Sequence[float] = DEFAULT_TAUS,
    params: AdapterParams = None,
    n_frames: int = N_EVAL_FRAMES,
) -> dict:
    """Total KeyToken count per tau over the 32-frame evaluation samples of ``clips``."""
    params = params if params is not None else AdapterParams.init(8, 8, 0)
    clips = list(clips)
    return {float(t): sum(clip_key_count(c, params, t, n_frames) for c in clips) for t in taus}


def is_monotone_nonincreasing(counts: dict) -> bool:
    vals = [counts[t] for t in sorted(counts)]
    return all(a >= b for a, b in zip(vals, vals[1:]))
