"""Stage one: per-object scene facts with discriminative referring expressions."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..scene import CameraPose, Scene, Vec3, visible_fractions

HAND_WORDS = ("point", "hand", "finger", "gesture")
_HAND_RE = re.compile(r"\b(" + "|".join(HAND_WORDS) + r")\w*", re.IGNORECASE)
DEFAULT_RADIUS = 1.0


@dataclass(frozen=True)
class SceneFact:
    object_id: str
    category: str
    referring_expression: str
    attributes: dict
    centroid: Vec3
    depth: float
    u: float
    v: float
    neighbors: tuple = ()

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "category": self.category,
            "referring_expression": self.referring_expression,
            "attributes": dict(self.attributes),
            "centroid": list(self.centroid),
            "depth": self.depth,
            "u": self.u,
            "v": self.v,
            "neighbors": list(self.neighbors),
        }


class FactList(list):
    """Facts for the visible objects plus full-scene category counts."""

    def __init__(self, facts=(), category_counts: Optional[dict] = None):
        super().__init__(facts)
        self.category_counts = dict(category_counts or {})

    def get(self, object_id: str) -> SceneFact:
        for f in self:
            if f.object_id == object_id:
                return f
        raise KeyError(object_id)

    def ids(self) -> list:
        return [f.object_id for f in self]


def mentions_hand(text: str) -> bool:
    return bool(_HAND_RE.search(text))


def referring_expressions(objects: Sequence) -> dict:
    """Shortest unique "the <attrs> <category>" phrase per object, adding attributes only on collision."""
    extra = ("material", "shape", "state")
    exprs = {}
    for o in objects:
        exprs[o.id] = [o.attributes["color"]]
    for level in range(len(extra) + 1):
        groups: dict = {}
        for o in objects:
            groups.setdefault((o.category, tuple(exprs[o.id])), []).append(o)
        clashes = [g for g in groups.values() if len(g) > 1]
        if not clashes:
            break
        if level == len(extra):
            for g in clashes:
                for n, o in enumerate(g, 1):
                    exprs[o.id].append(f"number {n}")
            break
        for g in clashes:
            for o in g:
                value = o.attributes.get(extra[level])
                if value is not None:
                    exprs[o.id].append(value)
    out = {}
    for o in objects:
        words = exprs[o.id]
        tail = [w for w in words if w.startswith("number ")]
        head = [w for w in words if not w.startswith("number ")]
        out[o.id] = " ".join(["the", *head, o.category, *tail])
    return out


def extract_scene_facts(
    scene: Scene,
    camera: CameraPose,
    referents: Sequence[str] = (),
    radius: float = DEFAULT_RADIUS,
    grid: int = 8,
) -> FactList:
    """One fact per object with non-zero visibility from ``camera``."""
    missing = [r for r in referents if r not in scene]
    if missing:
        raise ValueError(f"referents not in scene: {missing}")
    vis = visible_fractions(scene, camera, grid)
    shown = []
    for o in scene.objects:
        if vis[o.id] <= 0.0:
            continue
        x, y, z = camera.to_camera(o.centroid)
        if z <= 0.0:
            continue
        shown.append((o, x, y, z))
    exprs = referring_expressions([o for o, *_ in shown])
    cents = {o.id: np.asarray(o.centroid) for o, *_ in shown}
    facts = []
    for o, x, y, z in shown:
        dists = sorted(
            (float(np.linalg.norm(cents[o.id] - cents[p.id])), p.id) for p, *_ in shown if p.id != o.id
        )
        expr = exprs[o.id]
        if mentions_hand(expr):
            raise ValueError(f"referring expression {expr!r} mentions the hand")
        facts.append(
            SceneFact(
                object_id=o.id,
                category=o.category,
                referring_expression=expr,
                attributes=dict(o.attributes),
                centroid=o.centroid,
                depth=float(z),
                u=float(camera.cx + camera.fx * x / z),
                v=float(camera.cy + camera.fy * y / z),
                neighbors=tuple(pid for d, pid in dists if d <= radius),
            )
        )
    counts: dict = {}
    for o in scene.objects:
        counts[o.category] = counts.get(o.category, 0) + 1
    return FactList(facts, counts)
