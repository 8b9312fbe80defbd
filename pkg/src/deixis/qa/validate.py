"""Quality control for finished items: answerability, deictic ambiguity, option integrity."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from ..errors import DeixisError
from ..scene import CameraPose, Scene
from .facts import FactList, extract_scene_facts
from .item import QAItem
from .templates import TaskCategory, compute_answer, is_binary

DEICTIC_WORDS = ("this", "that", "these", "those", "it", "here", "there")
_DEICTIC_RE = re.compile(r"\b(" + "|".join(DEICTIC_WORDS) + r")\b", re.IGNORECASE)
_ORDINAL_RE = re.compile(r"\bthe (\w+) (object|one) I pointed at\b", re.IGNORECASE)

ANSWERABILITY = "oracle-answerability"
AMBIGUITY = "deictic-ambiguity"
INTEGRITY = "option-integrity"


@dataclass(frozen=True)
class ValidationReport:
    qa_id: str
    failures: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def failed_checks(self) -> tuple:
        return tuple(dict.fromkeys(f[0] for f in self.failures))

    def __bool__(self) -> bool:
        return self.ok


def has_deictic(question: str) -> bool:
    return bool(_DEICTIC_RE.search(question) or _ORDINAL_RE.search(question))


def leaked_terms(question: str, terms: Sequence[str], exempt: Sequence[str] = ()) -> list:
    """Terms found in ``question`` as whole words once exempt phrases are blanked out."""
    text = question
    for phrase in sorted(exempt, key=len, reverse=True):
        text = re.sub(re.escape(phrase), " ", text, flags=re.IGNORECASE)
    return [t for t in terms if re.search(r"\b" + re.escape(t) + r"\b", text, re.IGNORECASE)]


def target_terms(scene: Scene, target_ids: Sequence[str], facts: Optional[FactList] = None) -> list:
    terms = []
    for tid in target_ids:
        obj = scene.get(tid)
        terms.append(obj.category)
        if facts is not None and tid in facts.ids():
            terms.append(facts.get(tid).referring_expression)
    return list(dict.fromkeys(terms))


def anchor_phrases(item_params: dict, facts: Optional[FactList]) -> list:
    anchor = item_params.get("anchor")
    if anchor is None or facts is None or anchor not in facts.ids():
        return []
    return [facts.get(anchor).referring_expression]


def facts_for(item: QAItem, scene: Scene, referents: Sequence[str]) -> FactList:
    cam = item.provenance.get("fact_camera")
    if cam is None:
        raise KeyError("provenance lacks fact_camera")
    return extract_scene_facts(scene, CameraPose.from_dict(cam), referents)


def validate_item(
    item: QAItem,
    scene: Scene,
    referents: Sequence[str],
    facts: Optional[FactList] = None,
) -> ValidationReport:
    failures = []
    prov = item.provenance
    template = prov.get("template")
    params = prov.get("params", {})

    n = len(item.options)
    if len(set(item.options)) != n:
        failures.append((INTEGRITY, "options are not pairwise distinct"))
    expected = 2 if template is not None and is_binary(template) else 5
    if n != expected:
        failures.append((INTEGRITY, f"expected {expected} options, found {n}"))
    if item.category is TaskCategory.FEEDBACK and list(item.options) != ["Yes", "No"]:
        failures.append((INTEGRITY, "feedback options must be exactly Yes/No"))
    in_range = 0 <= item.answer_index < n
    if not in_range:
        failures.append((INTEGRITY, f"answer_index {item.answer_index} outside {n} options"))

    if facts is None:
        try:
            facts = facts_for(item, scene, referents)
        except (KeyError, ValueError) as exc:
            failures.append((ANSWERABILITY, f"cannot rebuild facts: {exc}"))
    if facts is not None and in_range:
        try:
            truth = compute_answer(template, params, facts, referents, int(prov.get("referent_ordinal", 0)))
            if truth != item.options[item.answer_index]:
                failures.append((ANSWERABILITY, f"oracle answer {truth!r} differs from keyed option"))
        except (DeixisError, KeyError, ValueError, TypeError) as exc:
            failures.append((ANSWERABILITY, f"oracle cannot answer: {exc}"))

    if not has_deictic(item.question):
        failures.append((AMBIGUITY, "question has no deictic reference"))
    leaks = leaked_terms(item.question, target_terms(scene, item.target_ids, facts), anchor_phrases(params, facts))
    if leaks:
        failures.append((AMBIGUITY, f"question names the target: {leaks}"))
    return ValidationReport(item.qa_id, tuple(failures))
