"""Frame-keypoint interleaving: question, then per frame its visual block and (if gated in) its hand token, then answer."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..errors import LengthMismatch
from .adapter import HandIntentToken

QUESTION, VIS, KEY, ANSWER = "question", "vis", "key", "answer"


@dataclass(frozen=True, eq=False)
class VisualTokenBlock:
    frame_index: int
    tokens: np.ndarray

    def __post_init__(self):
        t = np.array(self.tokens, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] < 1:
            raise ValueError("visual block must be an n_vis x d matrix with n_vis >= 1")
        t.setflags(write=False)
        object.__setattr__(self, "tokens", t)

    @property
    def n_vis(self) -> int:
        return self.tokens.shape[0]


@dataclass(frozen=True, eq=False)
class Element:
    kind: str
    payload: Any
    frame: int = -1

    @property
    def n_tokens(self) -> int:
        return self.payload.n_vis if self.kind == VIS else 1


class InterleavedSequence:
    """Ordered elements; ``length`` counts tokens, so a visual block contributes its n_vis rows."""

    __slots__ = ("elements", "length")

    def __init__(self, elements: Sequence[Element]):
        self.elements = tuple(elements)
        last_vis = None
        n_vis = None
        for i, el in enumerate(self.elements):
            if el.kind not in (QUESTION, VIS, KEY, ANSWER):
                raise ValueError(f"unknown element kind {el.kind!r}")
            if el.kind == VIS:
                if last_vis is not None and el.frame <= last_vis:
                    raise ValueError("visual block frames must strictly increase")
                if n_vis is not None and el.payload.n_vis != n_vis:
                    raise ValueError("n_vis must be constant across frames")
                last_vis, n_vis = el.frame, el.payload.n_vis
            elif el.kind == KEY:
                prev = self.elements[i - 1] if i else None
                if prev is None or prev.kind != VIS or prev.frame != el.frame:
                    raise ValueError(f"key token for frame {el.frame} must follow that frame's visual block")
        self.length = sum(el.n_tokens for el in self.elements)

    def __len__(self) -> int:
        return self.length

    def count(self, kind: str) -> int:
        return sum(1 for el in self.elements if el.kind == kind)

    @property
    def key_frames(self) -> list:
        return [el.frame for el in self.elements if el.kind == KEY]

    def without_keys(self) -> "InterleavedSequence":
        return InterleavedSequence([el for el in self.elements if el.kind != KEY])

    def layout(self) -> list:
        """Compact tags such as ``["Q", "V0", "K0", "V1", "A"]``."""
        tags = {QUESTION: "Q", VIS: "V", KEY: "K", ANSWER: "A"}
        return [tags[el.kind] + (str(el.frame) if el.kind in (VIS, KEY) else "") for el in self.elements]


def interleave(
    question_tokens: Sequence,
    visual_blocks: Sequence[VisualTokenBlock],
    hand_tokens: Sequence[HandIntentToken],
    answer_tokens: Sequence = (),
) -> InterleavedSequence:
    if len(visual_blocks) != len(hand_tokens):
        raise LengthMismatch(f"{len(visual_blocks)} visual blocks but {len(hand_tokens)} hand tokens")
    els = [Element(QUESTION, q) for q in question_tokens]
    for block, hand in zip(visual_blocks, hand_tokens):
        els.append(Element(VIS, block, block.frame_index))
        if hand.present:
            els.append(Element(KEY, hand, block.frame_index))
    els.extend(Element(ANSWER, a) for a in answer_tokens)
    return InterleavedSequence(els)


def token_overhead(seq: InterleavedSequence) -> float:
    """Share of the sequence taken by hand intent tokens."""
    return seq.count(KEY) / seq.length if seq.length else 0.0
