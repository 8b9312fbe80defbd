"""Multiple-choice accuracy per category, unweighted category average, analytic chance level."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..errors import UnknownQaId
from ..qa.item import QAItem
from ..qa.templates import TaskCategory
from .extract import extract_choice


@dataclass(frozen=True)
class Prediction:
    qa_id: str
    raw_output: str

    def to_dict(self) -> dict:
        return {"qa_id": self.qa_id, "raw_output": self.raw_output}


@dataclass(frozen=True)
class ScoreReport:
    per_category: dict
    average: float
    invalid_count: int = 0
    label: str = "main"

    def accuracy(self, category) -> float:
        return self.per_category[TaskCategory.parse(category).value]["accuracy"]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "per_category": {k: dict(v) for k, v in self.per_category.items()},
            "average": self.average,
            "invalid_count": self.invalid_count,
        }


def _category_order(items: Iterable[QAItem]) -> list:
    present = {i.category for i in items}
    return [c for c in TaskCategory if c in present]


def _report(hits: dict, counts: dict, order: list, invalid: int, label: str) -> ScoreReport:
    per = {}
    accs = []
    for cat in order:
        acc = 100 * hits[cat] / counts[cat]
        accs.append(acc)
        per[cat.value] = {"accuracy": float(acc), "n": counts[cat]}
    average = float(sum(accs, Fraction(0)) / len(accs)) if accs else 0.0
    return ScoreReport(per, average, invalid, label)


def score(dataset: Sequence[QAItem], predictions: Iterable[Prediction], label: str = "main") -> ScoreReport:
    """Exact option-index accuracy; unparseable or missing predictions count as wrong."""
    by_id = {item.qa_id: item for item in dataset}
    raw: dict = {}
    for p in predictions:
        if p.qa_id not in by_id:
            raise UnknownQaId(f"prediction for unknown qa_id {p.qa_id!r}")
        if p.qa_id in raw and raw[p.qa_id] != p.raw_output:
            raise ValueError(f"conflicting predictions for {p.qa_id!r}")
        raw[p.qa_id] = p.raw_output
    order = _category_order(dataset)
    hits = {c: Fraction(0) for c in order}
    counts = {c: 0 for c in order}
    invalid = 0
    for item in dataset:
        counts[item.category] += 1
        idx = extract_choice(raw[item.qa_id], len(item.options)) if item.qa_id in raw else None
        if idx is None:
            invalid += 1
        elif idx == item.answer_index:
            hits[item.category] += 1
    return _report(hits, counts, order, invalid, label)


def random_baseline(dataset: Sequence[QAItem]) -> ScoreReport:
    """Expected accuracy of a uniform guess: 100 times the mean of 1/|options| per category."""
    if not dataset:
        raise ValueError("empty dataset")
    order = _category_order(dataset)
    hits = {c: Fraction(0) for c in order}
    counts = {c: 0 for c in order}
    for item in dataset:
        counts[item.category] += 1
        hits[item.category] += Fraction(1, len(item.options))
    return _report(hits, counts, order, 0, "random")
