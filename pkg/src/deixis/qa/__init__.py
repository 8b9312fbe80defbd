from .facts import FactList, SceneFact, extract_scene_facts, referring_expressions
from .item import QAItem
from .negatives import NegativeStrategy, generate_negatives
from .pipeline import ClipQA, QAConfig, clip_questions
from .rephrase import DraftQA, HttpRephraser, rephrase_deictic, rephrase_text
from .templates import StructuredQA, TaskCategory, compute_answer, generate_question
from .validate import ValidationReport, validate_item

__all__ = [
    "ClipQA", "DraftQA", "FactList", "HttpRephraser", "NegativeStrategy", "QAConfig", "QAItem",
    "SceneFact", "StructuredQA", "TaskCategory", "ValidationReport", "clip_questions",
    "compute_answer", "extract_scene_facts", "generate_negatives", "generate_question",
    "referring_expressions", "rephrase_deictic", "rephrase_text", "validate_item",
]
