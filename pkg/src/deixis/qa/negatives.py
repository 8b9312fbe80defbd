"""Hard-negative distractors drawn in priority order, then a seeded option shuffle."""
from __future__ import annotations

import enum
from typing import Sequence

from .. import vocab
from ..errors import InsufficientDistractors
from ..synth import derive_rng
from .facts import FactList
from .templates import SPATIAL_FAKES, StructuredQA, all_cells, cell_phrase, spatial_parts

N_OPTIONS = 5
BINARY_OPTIONS = ("Yes", "No")

_NEG_SHUFFLE, _NEG_PERMUTE = 21, 22


class NegativeStrategy(str, enum.Enum):
    VISIBLE_SOURCE = "VisibleSource"
    PLAUSIBLE_FAKE = "PlausibleFake"
    LOGICAL_OPPOSITE = "LogicalOpposite"


PRIORITY = (NegativeStrategy.VISIBLE_SOURCE, NegativeStrategy.PLAUSIBLE_FAKE, NegativeStrategy.LOGICAL_OPPOSITE)


def _near_first(facts: FactList, target_id: str) -> list:
    """Other visible facts, neighbours of the target first."""
    target = facts.get(target_id)
    order = list(target.neighbors) + [f.object_id for f in facts if f.object_id not in target.neighbors]
    return [facts.get(i) for i in order if i != target_id]


def _expression_fakes(target, facts: FactList) -> list:
    taken = {f.referring_expression for f in facts}
    out = []
    for color in vocab.attribute_values(target.category, "color"):
        out.append(f"the {color} {target.category}")
    for cat in vocab.categories():
        if cat != target.category:
            out.append(f"the {target.attributes['color']} {cat}")
    return [e for e in out if e not in taken]


def candidate_pools(qa: StructuredQA, facts: FactList, referents: Sequence[str] = ()) -> dict:
    """Distractor candidates per strategy, each list in its natural priority order."""
    target = facts.get(qa.target_ids[0])
    others = _near_first(facts, target.object_id)
    pools = {s: [] for s in NegativeStrategy}
    vs, pf, lo = (pools[s] for s in PRIORITY)
    t = qa.template
    if t in ("reference.expression", "temporal.ordinal"):
        if t == "temporal.ordinal":
            vs.extend(facts.get(r).referring_expression for r in referents if r != target.object_id and r in facts.ids())
        vs.extend(f.referring_expression for f in others)
        pf.extend(_expression_fakes(target, facts))
    elif t == "reference.category":
        vs.extend(f.category for f in others)
        pf.extend(vocab.categories())
    elif t == "attribute":
        attr = qa.params["attribute"]
        vs.extend(f.attributes[attr] for f in others if attr in f.attributes)
        pf.extend(vocab.attribute_values(target.category, attr))
        pf.extend(vocab.global_values(attr))
        if attr == "state":
            opp = vocab.opposite(target.attributes[attr])
            if opp:
                lo.append(opp)
    elif t == "counting":
        correct = int(qa.answer)
        vs.extend(str(n) for n in sorted(set(facts.category_counts.values())))
        for k in (1, 2, 3, 4):
            pf.extend(str(max(1, correct + s * k)) for s in (1, -1))
    elif t == "spatial.cell":
        anchor = facts.get(qa.params["anchor"])
        answer_parts = set(spatial_parts(target, anchor))

        def valid(parts) -> bool:
            # a relation implied by the true one is not a wrong answer
            return not set(parts) <= answer_parts

        for f in others:
            if f.object_id == anchor.object_id:
                continue
            parts = spatial_parts(f, anchor)
            if parts and valid(parts):
                vs.append(cell_phrase(parts, anchor.referring_expression))
        if len(answer_parts) == 1:
            pf.extend(f"{w} {anchor.referring_expression}" for w in SPATIAL_FAKES)
        flip = {"left of": "right of", "right of": "left of", "in front of": "behind", "behind": "in front of"}
        parts = spatial_parts(target, anchor)
        flips = [tuple(flip[p] for p in parts)]
        if len(parts) == 2:
            flips += [(flip[parts[0]], parts[1]), (parts[0], flip[parts[1]])]
        rest = [c for c in all_cells() if c not in flips]
        lo.extend(cell_phrase(c, anchor.referring_expression) for c in flips + rest if valid(c))
    else:
        raise ValueError(f"template {t!r} has no distractor pools")
    return pools


def generate_negatives(qa: StructuredQA, facts: FactList, seed: int, referents: Sequence[str] = ()) -> tuple:
    """``(options, answer_index)``; binary items keep the fixed Yes/No order."""
    if qa.binary:
        if qa.answer not in BINARY_OPTIONS:
            raise ValueError(f"binary answer must be Yes or No, got {qa.answer!r}")
        return list(BINARY_OPTIONS), BINARY_OPTIONS.index(qa.answer)
    pools = candidate_pools(qa, facts, referents)
    rng = derive_rng(seed, _NEG_SHUFFLE)
    chosen: list = []
    seen = {qa.answer}
    for strategy in PRIORITY:
        pool = list(dict.fromkeys(c for c in pools[strategy] if c not in seen))
        if strategy is not NegativeStrategy.LOGICAL_OPPOSITE:
            pool = [pool[i] for i in rng.permutation(len(pool))]
        for cand in pool:
            if len(chosen) == N_OPTIONS - 1:
                break
            chosen.append(cand)
            seen.add(cand)
    if len(chosen) < N_OPTIONS - 1:
        raise InsufficientDistractors(f"only {len(chosen)} distractors for {qa.template}")
    options = [qa.answer] + chosen
    perm = derive_rng(seed, _NEG_PERMUTE).permutation(N_OPTIONS)
    shuffled = [options[i] for i in perm]
    return shuffled, int(list(perm).index(0))
