from __future__ import annotations

from dataclasses import dataclass, field

from .templates import TaskCategory


@dataclass(frozen=True)
class QAItem:
    qa_id: str
    clip_id: str
    category: TaskCategory
    question: str
    options: tuple
    answer_index: int
    target_ids: tuple
    structured_question: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "category", TaskCategory.parse(self.category))
        object.__setattr__(self, "options", tuple(self.options))
        object.__setattr__(self, "target_ids", tuple(self.target_ids))

    @property
    def answer(self) -> str:
        return self.options[self.answer_index]

    def to_dict(self) -> dict:
        return {
            "qa_id": self.qa_id,
            "clip_id": self.clip_id,
            "category": self.category.value,
            "question": self.question,
            "options": list(self.options),
            "answer_index": self.answer_index,
            "target_ids": list(self.target_ids),
            "structured_question": self.structured_question,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QAItem":
        return cls(
            qa_id=d["qa_id"],
            clip_id=d["clip_id"],
            category=d["category"],
            question=d["question"],
            options=tuple(d["options"]),
            answer_index=int(d["answer_index"]),
            target_ids=tuple(d["target_ids"]),
            structured_question=d["structured_question"],
            provenance=dict(d.get("provenance", {})),
        )
