"""Stage two: category templates with <objectN> placeholders and fact-derived answers."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .. import vocab
from ..errors import CategoryInfeasible
from ..synth import derive_rng
from .facts import FactList, SceneFact

H_DEAD_PX = 10.0
DEPTH_DEAD_M = 0.05
ORDINALS = ("first", "second", "third", "fourth", "fifth")
SPATIAL_FAKES = ("on top of", "under", "inside")

_T_VARIANT = 11


class TaskCategory(str, enum.Enum):
    REFERENCE = "Reference"
    COUNTING = "Counting"
    SPATIAL = "Spatial"
    TEMPORAL = "Temporal"
    ATTRIBUTE = "Attribute"
    FEEDBACK = "Feedback"

    @classmethod
    def parse(cls, name) -> "TaskCategory":
        if isinstance(name, cls):
            return name
        for c in cls:
            if c.value.lower() == str(name).strip().lower():
                return c
        raise ValueError(f"unknown task category {name!r}")


@dataclass(frozen=True)
class StructuredQA:
    category: TaskCategory
    structured_question: str
    answer: str
    target_ids: tuple
    template: str
    params: dict = field(default_factory=dict)
    referent_ordinal: int = 0
    binary: bool = False

    @property
    def placeholders(self) -> tuple:
        return tuple(placeholder(t) for t in self.target_ids)


def placeholder_index(object_id: str) -> int:
    return int(object_id.rsplit("_", 1)[1])


def placeholder(object_id: str) -> str:
    return f"<object{placeholder_index(object_id)}>"


# ---------------------------------------------------------------- relations


def spatial_parts(target: SceneFact, anchor: SceneFact) -> tuple:
    """Relation words that hold for ``target`` seen against ``anchor``; dead zones give no word."""
    parts = []
    du = target.u - anchor.u
    if du < -H_DEAD_PX:
        parts.append("left of")
    elif du > H_DEAD_PX:
        parts.append("right of")
    dz = target.depth - anchor.depth
    if dz < -DEPTH_DEAD_M:
        parts.append("in front of")
    elif dz > DEPTH_DEAD_M:
        parts.append("behind")
    return tuple(parts)


def cell_phrase(parts: Sequence[str], anchor_expr: str) -> str:
    return " and ".join(parts) + " " + anchor_expr


def all_cells() -> list:
    cells = []
    for h in ("left of", "right of", None):
        for d in ("in front of", "behind", None):
            parts = tuple(p for p in (h, d) if p)
            if parts:
                cells.append(parts)
    return cells


def is_closer(target: SceneFact, anchor: SceneFact) -> Optional[bool]:
    dz = target.depth - anchor.depth
    if abs(dz) <= DEPTH_DEAD_M:
        return None
    return dz < 0


def is_left(target: SceneFact, anchor: SceneFact) -> Optional[bool]:
    du = target.u - anchor.u
    if abs(du) <= H_DEAD_PX:
        return None
    return du < 0


def affords(goal: str, category: str) -> bool:
    return category in vocab.affordances()[goal]


# ---------------------------------------------------------------- answers


def compute_answer(template: str, params: dict, facts: FactList, referents: Sequence[str], ordinal: int = 0) -> str:
    """Answer string for a template instance, derived from facts and referents only."""
    if ordinal >= len(referents):
        raise CategoryInfeasible(f"referent ordinal {ordinal} beyond {len(referents)} gestures")
    target = facts.get(referents[ordinal])
    if template in ("reference.expression", "temporal.ordinal"):
        return target.referring_expression
    if template == "reference.category":
        return target.category
    if template == "attribute":
        return target.attributes[params["attribute"]]
    if template == "counting":
        return str(facts.category_counts.get(target.category, 0))
    if template == "feedback":
        return "Yes" if affords(params["goal"], target.category) else "No"
    anchor = facts.get(params["anchor"])
    if template == "spatial.cell":
        parts = spatial_parts(target, anchor)
        if not parts:
            raise CategoryInfeasible("target and anchor share a dead-zone cell")
        return cell_phrase(parts, anchor.referring_expression)
    if template == "spatial.depth":
        closer = is_closer(target, anchor)
        if closer is None:
            raise CategoryInfeasible("depth difference inside the dead zone")
        return "Yes" if closer == (params["relation"] == "closer") else "No"
    if template == "spatial.horizontal":
        left = is_left(target, anchor)
        if left is None:
            raise CategoryInfeasible("horizontal offset inside the dead zone")
        return "Yes" if left == (params["relation"] == "left") else "No"
    raise ValueError(f"unknown template {template!r}")


_QUESTIONS = {
    "reference.expression": "What is {o}?",
    "reference.category": "What kind of object is {o}?",
    "temporal.ordinal": "What is {o}?",
    "counting": "How many objects of the same kind as {o} are on the desk?",
    "feedback": "{goal} Can I use {o} for that?",
    "spatial.cell": "Where is {o} relative to {anchor}?",
}
_ATTRIBUTE_QUESTIONS = {
    "color": "What color is {o}?",
    "material": "What material is {o} made of?",
    "shape": "What shape is {o}?",
    "state": "What state is {o} in?",
}
_BINARY_QUESTIONS = {
    ("spatial.depth", "closer"): "Is {o} closer to me than {anchor}?",
    ("spatial.depth", "farther"): "Is {o} farther from me than {anchor}?",
    ("spatial.horizontal", "left"): "Is {o} to the left of {anchor}?",
    ("spatial.horizontal", "right"): "Is {o} to the right of {anchor}?",
}


def render_question(template: str, params: dict, target_id: str, facts: FactList) -> str:
    fmt = {"o": placeholder(target_id)}
    if "anchor" in params:
        fmt["anchor"] = facts.get(params["anchor"]).referring_expression
    if "goal" in params:
        fmt["goal"] = params["goal"]
    if template == "attribute":
        return _ATTRIBUTE_QUESTIONS[params["attribute"]].format(**fmt)
    if template in ("spatial.depth", "spatial.horizontal"):
        return _BINARY_QUESTIONS[(template, params["relation"])].format(**fmt)
    return _QUESTIONS[template].format(**fmt)


def is_binary(template: str) -> bool:
    return template in ("feedback", "spatial.depth", "spatial.horizontal")


# ---------------------------------------------------------------- generation


@dataclass(frozen=True)
class TemplateConfig:
    spatial_binary_prob: float = 0.25


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _spatial_params(target: SceneFact, facts: FactList, rng, config: TemplateConfig) -> tuple:
    anchors = [f for f in facts if f.object_id != target.object_id and f.category != target.category]
    binary = rng.random() < config.spatial_binary_prob
    if binary:
        want_yes = rng.random() < 0.5
        axis = "spatial.depth" if rng.random() < 0.5 else "spatial.horizontal"
        for tmpl in (axis, "spatial.horizontal" if axis == "spatial.depth" else "spatial.depth"):
            test = is_closer if tmpl == "spatial.depth" else is_left
            usable = [a for a in anchors if test(target, a) is not None]
            if not usable:
                continue
            anchor = _pick(rng, usable)
            truth = test(target, anchor)
            pos, neg = ("closer", "farther") if tmpl == "spatial.depth" else ("left", "right")
            relation = pos if truth == want_yes else neg
            return tmpl, {"anchor": anchor.object_id, "relation": relation}
        raise CategoryInfeasible("no anchor outside the dead zones")
    usable = [a for a in anchors if spatial_parts(target, a)]
    if not usable:
        raise CategoryInfeasible("no anchor object for a spatial relation")
    return "spatial.cell", {"anchor": _pick(rng, usable).object_id}


def generate_question(
    facts: FactList,
    referents: Sequence[str],
    category,
    seed: int,
    variant: Optional[str] = None,
    ordinal: Optional[int] = None,
    config: TemplateConfig = TemplateConfig(),
) -> StructuredQA:
    """Instantiate one template for ``category``; the answer is computed, never sampled."""
    category = TaskCategory.parse(category)
    if not referents:
        raise CategoryInfeasible("no pointed referent")
    if category is TaskCategory.TEMPORAL and len(referents) < 2:
        raise CategoryInfeasible("temporal questions need at least two gestures")
    rng = derive_rng(seed, _T_VARIANT)
    k = int(rng.integers(len(referents))) if ordinal is None else ordinal
    if not 0 <= k < len(referents):
        raise CategoryInfeasible(f"no gesture number {k + 1}")
    target_id = referents[k]
    if target_id not in facts.ids():
        raise CategoryInfeasible(f"referent {target_id} not visible in the fact frame")
    target = facts.get(target_id)

    params: dict = {}
    if category is TaskCategory.REFERENCE:
        template = variant or _pick(rng, ["reference.expression", "reference.category"])
    elif category is TaskCategory.TEMPORAL:
        template = "temporal.ordinal"
    elif category is TaskCategory.COUNTING:
        template = "counting"
    elif category is TaskCategory.ATTRIBUTE:
        template = "attribute"
        attrs = [a for a in vocab.ATTRIBUTES if a in target.attributes]
        params["attribute"] = variant or _pick(rng, attrs)
    elif category is TaskCategory.FEEDBACK:
        template = "feedback"
        goals = sorted(vocab.affordances())
        want_yes = rng.random() < 0.5
        pool = [g for g in goals if affords(g, target.category) == want_yes]
        if not pool:
            pool = goals
        params["goal"] = _pick(rng, pool)
    else:
        template, params = _spatial_params(target, facts, rng, config)
    if variant and category not in (TaskCategory.ATTRIBUTE,) and template != variant:
        raise ValueError(f"variant {variant!r} does not belong to {category.value}")

    answer = compute_answer(template, params, facts, referents, k)
    return StructuredQA(
        category=category,
        structured_question=render_question(template, params, target_id, facts),
        answer=answer,
        target_ids=(target_id,),
        template=template,
        params=params,
        referent_ordinal=k,
        binary=is_binary(template),
    )
