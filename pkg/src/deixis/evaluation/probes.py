"""Answerers with declared input access, and the probe runner that enforces it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import FlagViolation
from ..qa.facts import extract_scene_facts
from ..qa.item import QAItem
from ..qa.pipeline import fact_frame
from ..qa.templates import compute_answer
from ..resolver import ResolverConfig, resolve_events
from .extract import letter
from .scoring import Prediction, ScoreReport, score


@dataclass(frozen=True)
class Flags:
    sees_video: bool
    sees_question: bool
    sees_options: bool


class ItemView:
    """What an answerer may read about one item; masked fields raise FlagViolation."""

    def __init__(self, item: QAItem, flags: Flags, clip=None, rng: Optional[np.random.Generator] = None):
        self._item = item
        self._flags = flags
        self._clip = clip
        self.qa_id = item.qa_id
        self.num_options = len(item.options)
        self.rng = rng

    @property
    def question(self) -> str:
        if not self._flags.sees_question:
            raise FlagViolation(f"{self.qa_id}: question text is masked")
        return self._item.question

    @property
    def structure(self) -> dict:
        if not self._flags.sees_question:
            raise FlagViolation(f"{self.qa_id}: question structure is masked")
        return self._item.provenance

    @property
    def options(self) -> tuple:
        if not self._flags.sees_options:
            raise FlagViolation(f"{self.qa_id}: options are masked")
        return self._item.options

    @property
    def clip(self):
        if not self._flags.sees_video:
            raise FlagViolation(f"{self.qa_id}: clip data is masked")
        if self._clip is None:
            raise LookupError(f"{self.qa_id}: clip {self._item.clip_id} not supplied")
        return self._clip


class Answerer:
    flags = Flags(False, False, False)
    name = "answerer"
    concurrent_safe = True

    def answer(self, view: ItemView) -> str:
        raise NotImplementedError


class BlindAnswerer(Answerer):
    """Question and options without the clip; always names the first option."""

    flags = Flags(False, True, True)
    name = "blind"

    def answer(self, view: ItemView) -> str:
        view.question
        return f"({letter(0)})"


class ChoicesOnlyAnswerer(Answerer):
    """Options only; picks the longest, earliest on ties."""

    flags = Flags(False, False, True)
    name = "choices-only"

    def answer(self, view: ItemView) -> str:
        opts = view.options
        best = max(range(len(opts)), key=lambda i: (len(opts[i]), -i))
        return f"({letter(best)})"


class RandomAnswerer(Answerer):
    flags = Flags(False, False, True)
    name = "random"

    def answer(self, view: ItemView) -> str:
        return f"({letter(int(view.rng.integers(view.num_options)))})"


class GeometricOracle(Answerer):
    """Full access: resolves the gestures itself and recomputes the answer from scene geometry."""

    flags = Flags(True, True, True)
    name = "oracle"
    concurrent_safe = False

    def __init__(self, resolver: ResolverConfig = ResolverConfig()):
        self.resolver = resolver
        self._cache: dict = {}

    def _facts(self, clip):
        if clip.clip_id not in self._cache:
            events = resolve_events(clip, self.resolver)
            referents = [e.referent_id for e in events]
            facts = None
            if referents:
                facts = extract_scene_facts(clip.scene, clip.camera_track[fact_frame(events)], referents)
            self._cache[clip.clip_id] = (referents, facts)
        return self._cache[clip.clip_id]

    def answer(self, view: ItemView) -> str:
        referents, facts = self._facts(view.clip)
        if facts is None:
            return "no gesture found"
        s = view.structure
        truth = compute_answer(s["template"], s.get("params", {}), facts, referents, int(s.get("referent_ordinal", 0)))
        opts = view.options
        if truth not in opts:
            return "none of the options"
        return f"Answer: {letter(opts.index(truth))}"


BUILTIN = {"blind": BlindAnswerer, "choices-only": ChoicesOnlyAnswerer, "random": RandomAnswerer}


def run_answerer(
    dataset: Sequence[QAItem],
    answerer: Answerer,
    seed: int = 0,
    clips: Optional[Mapping] = None,
) -> list:
    rng = np.random.default_rng(seed)
    preds = []
    for item in dataset:
        clip = clips.get(item.clip_id) if (clips is not None and answerer.flags.sees_video) else None
        view = ItemView(item, answerer.flags, clip, rng)
        preds.append(Prediction(item.qa_id, answerer.answer(view)))
    return preds


def bias_probe(
    dataset: Sequence[QAItem],
    answerer: Answerer,
    seed: int = 0,
    clips: Optional[Mapping] = None,
) -> ScoreReport:
    """Score ``answerer`` with its inputs masked according to its flags."""
    preds = run_answerer(dataset, answerer, seed, clips)
    return score(dataset, preds, label=answerer.name)
