"""Per-clip QA assembly: resolve, extract facts, instantiate, add negatives, rephrase, validate."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..errors import CategoryInfeasible, InsufficientDistractors, RephraserUnavailable, ValidationFailed
from ..resolver import ResolverConfig, resolve_events
from ..synth import ClipRecord, derive_rng, derive_seed
from .facts import DEFAULT_RADIUS, FactList, extract_scene_facts
from .item import QAItem
from .negatives import generate_negatives
from .rephrase import DraftQA, rephrase_deictic
from .templates import TaskCategory, TemplateConfig, generate_question
from .validate import validate_item

log = logging.getLogger(__name__)

DEFAULT_COUNTS = {
    TaskCategory.REFERENCE: 2,
    TaskCategory.COUNTING: 1,
    TaskCategory.SPATIAL: 1,
    TaskCategory.TEMPORAL: 2,
    TaskCategory.ATTRIBUTE: 1,
    TaskCategory.FEEDBACK: 1,
}
REFERENCE_VARIANTS = ("reference.expression", "reference.category")
_SLOT_ORDINALS = 31


@dataclass(frozen=True)
class QAConfig:
    seed: int = 0
    counts: dict = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    spatial_binary_prob: float = 0.25
    radius: float = DEFAULT_RADIUS
    resolver: ResolverConfig = ResolverConfig()
    rephrase_mode: str = "rule"
    rephrase_fallback: bool = True

    def __post_init__(self):
        counts = {TaskCategory.parse(k): int(v) for k, v in self.counts.items()}
        if any(v < 0 for v in counts.values()):
            raise ValueError("per-category counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        if not 0.0 <= self.spatial_binary_prob <= 1.0:
            raise ValueError("spatial_binary_prob must be a probability")


@dataclass
class ClipQA:
    clip_id: str
    items: list = field(default_factory=list)
    drops: list = field(default_factory=list)  # (category, reason)
    referents: list = field(default_factory=list)


def fact_frame(events) -> int:
    """Frame whose camera pose anchors the scene facts: middle of the first resolved gesture."""
    first = events[0]
    return (first.start_frame + first.end_frame) // 2


def plan_slots(n_referents: int, config: QAConfig, seed: int) -> list:
    """``(category, variant, ordinal)`` per requested item; infeasible slots carry a reason instead."""
    rng = derive_rng(seed, _SLOT_ORDINALS)
    slots = []
    for cat in TaskCategory:
        n = config.counts.get(cat, 0)
        if n == 0:
            continue
        if cat is TaskCategory.REFERENCE:
            for i in range(n):
                if n_referents != 1:
                    slots.append((cat, None, None, "reference questions need exactly one gesture"))
                else:
                    slots.append((cat, REFERENCE_VARIANTS[i % len(REFERENCE_VARIANTS)], 0, None))
        elif cat is TaskCategory.TEMPORAL:
            if n_referents < 2:
                slots.extend((cat, None, None, "temporal questions need at least two gestures") for _ in range(n))
                continue
            order = [int(k) for k in rng.permutation(n_referents)]
            for i in range(n):
                if i < n_referents:
                    slots.append((cat, None, order[i], None))
                else:
                    slots.append((cat, None, None, "more temporal items than gestures"))
        else:
            for _ in range(n):
                slots.append((cat, None, int(rng.integers(max(1, n_referents))), None))
    return slots


def clip_questions(
    clip: ClipRecord,
    config: QAConfig = QAConfig(),
    client=None,
) -> ClipQA:
    out = ClipQA(clip.clip_id)
    events = resolve_events(clip, config.resolver)
    referents = [e.referent_id for e in events]
    out.referents = referents
    seed = derive_seed(config.seed, clip.rng_seed)
    if not referents:
        for cat in TaskCategory:
            out.drops.extend((cat, "no resolved gesture") for _ in range(config.counts.get(cat, 0)))
        return out
    frame = fact_frame(events)
    camera = clip.camera_track[frame]
    facts = extract_scene_facts(clip.scene, camera, referents, config.radius)
    tconf = TemplateConfig(config.spatial_binary_prob)
    seen_questions: set = set()
    for slot, (cat, variant, ordinal, reason) in enumerate(plan_slots(len(referents), config, seed)):
        if reason is not None:
            out.drops.append((cat, f"infeasible: {reason}"))
            continue
        item_seed = derive_seed(seed, slot)
        try:
            qa = generate_question(facts, referents, cat, item_seed, variant=variant, ordinal=ordinal, config=tconf)
            options, answer_index = generate_negatives(qa, facts, item_seed, referents)
        except CategoryInfeasible as exc:
            out.drops.append((cat, f"infeasible: {exc}"))
            continue
        except InsufficientDistractors as exc:
            out.drops.append((cat, f"distractors: {exc}"))
            continue
        draft = DraftQA(
            qa_id=f"{clip.clip_id}-q{slot:02d}",
            clip_id=clip.clip_id,
            qa=qa,
            options=tuple(options),
            answer_index=answer_index,
            provenance={
                "template": qa.template,
                "params": dict(qa.params),
                "referent_ordinal": qa.referent_ordinal,
                "fact_frame": frame,
                "fact_camera": camera.to_dict(),
                "seed": item_seed,
            },
        )

        def check(item: QAItem):
            return validate_item(item, clip.scene, referents, facts)

        try:
            item = rephrase_deictic(draft, referents, config.rephrase_mode, client, check, config.rephrase_fallback)
        except ValidationFailed as exc:
            out.drops.append((cat, f"validation: {exc}"))
            continue
        report = check(item)
        if not report.ok:
            out.drops.append((cat, "validation: " + ",".join(report.failed_checks)))
            continue
        if item.question in seen_questions:
            out.drops.append((cat, "duplicate question"))
            continue
        seen_questions.add(item.question)
        out.items.append(item)
    return out
