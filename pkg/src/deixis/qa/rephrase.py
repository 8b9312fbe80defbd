"""Stage three: swap object placeholders for deictic references.

Rule mode is deterministic. External mode posts the structured question to an
HTTP service and re-validates whatever comes back.
"""
from __future__ import annotations

import json
import logging
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from ..errors import RephraserUnavailable, ValidationFailed
from .item import QAItem
from .templates import ORDINALS, StructuredQA, placeholder

log = logging.getLogger(__name__)

_PH = r"<object\d+>"
_GROUP_RE = re.compile(rf"{_PH}(?:(?:, | and |, and ){_PH})+")
_SINGLE_RE = re.compile(_PH)


def ordinal_phrase(k: int) -> str:
    word = ORDINALS[k] if k < len(ORDINALS) else f"{k + 1}th"
    return f"the {word} object I pointed at"


def rephrase_text(structured: str, referents: Sequence[str]) -> str:
    """Rule-based substitution: plural groups become "these"; a lone referent becomes "this" then "it";
    with several gestures each referent is named by its gesture order."""
    order = {placeholder(r): k for k, r in enumerate(referents)}
    multi = len(referents) > 1

    def group(m: re.Match) -> str:
        phs = _SINGLE_RE.findall(m.group(0))
        return "these" if all(p in order for p in phs) else m.group(0)

    text = _GROUP_RE.sub(group, structured)
    seen: set = set()

    def single(m: re.Match) -> str:
        ph = m.group(0)
        if ph not in order:
            return ph
        if multi:
            return ordinal_phrase(order[ph])
        out = "it" if ph in seen else "this"
        seen.add(ph)
        return out

    text = _SINGLE_RE.sub(single, text)
    return text[0].upper() + text[1:] if text else text


@dataclass(frozen=True)
class DraftQA:
    """A structured question with its finished options, waiting for surface wording."""

    qa_id: str
    clip_id: str
    qa: StructuredQA
    options: tuple
    answer_index: int
    provenance: dict = field(default_factory=dict)

    def to_item(self, question: str, mode: str) -> QAItem:
        prov = dict(self.provenance)
        prov["rephrase"] = mode
        return QAItem(
            qa_id=self.qa_id,
            clip_id=self.clip_id,
            category=self.qa.category,
            question=question,
            options=tuple(self.options),
            answer_index=self.answer_index,
            target_ids=self.qa.target_ids,
            structured_question=self.qa.structured_question,
            provenance=prov,
        )


class HttpRephraser:
    """Client for ``POST /rephrase``; bounds concurrent requests and retries transient failures."""

    def __init__(self, endpoint: str, timeout_s: float = 5.0, retries: int = 2, max_inflight: int = 4, backoff_s: float = 0.1):
        if max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s
        self.retries = retries
        self.backoff_s = backoff_s
        self._slots = threading.BoundedSemaphore(max_inflight)

    def payload(self, draft: DraftQA) -> dict:
        return {
            "structured_question": draft.qa.structured_question,
            "options": list(draft.options),
            "target_placeholders": list(draft.qa.placeholders),
        }

    def __call__(self, draft: DraftQA) -> str:
        body = json.dumps(self.payload(draft)).encode("utf-8")
        last: Optional[Exception] = None
        for attempt in range(self.retries + 1):
            req = urllib.request.Request(
                self.endpoint + "/rephrase", data=body, method="POST",
                headers={"Content-Type": "application/json"},
            )
            try:
                with self._slots, urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                    reply = json.loads(resp.read().decode("utf-8"))
                question = reply["question"]
                if not isinstance(question, str) or not question.strip():
                    raise ValueError("empty question in reply")
                return question.strip()
            except (urllib.error.URLError, OSError, ValueError, KeyError) as exc:
                last = exc
                if attempt < self.retries:
                    time.sleep(self.backoff_s * (2 ** attempt))
        raise RephraserUnavailable(f"{self.endpoint}/rephrase failed after {self.retries + 1} attempts: {last}")


def rephrase_deictic(
    draft: DraftQA,
    referents: Sequence[str],
    mode: str = "rule",
    client=None,
    check=None,
    fallback: bool = True,
) -> QAItem:
    """Surface the question with deictic wording.

    ``check`` is called with the candidate item and must return a report whose
    ``ok`` is false when the wording is unusable; external output failing it
    falls back to the rule text unless ``fallback`` is off.
    """
    if not _SINGLE_RE.search(draft.qa.structured_question):
        raise ValueError("structured question has no object placeholder")
    if mode == "rule":
        return draft.to_item(rephrase_text(draft.qa.structured_question, referents), "rule")
    if mode != "external":
        raise ValueError(f"unknown rephrase mode {mode!r}")
    if client is None:
        raise RephraserUnavailable("external mode without a configured rephraser")
    try:
        item = draft.to_item(client(draft), "external")
    except RephraserUnavailable:
        if not fallback:
            raise
        log.warning("rephraser unavailable for %s, using rules", draft.qa_id)
        return draft.to_item(rephrase_text(draft.qa.structured_question, referents), "rule-fallback")
    if check is not None:
        report = check(item)
        if not report.ok:
            if not fallback:
                raise ValidationFailed(f"rephrased {draft.qa_id} failed validation", report.failures)
            log.warning("rephrased %s rejected (%s), using rules", draft.qa_id, report.failed_checks)
            return draft.to_item(rephrase_text(draft.qa.structured_question, referents), "rule-fallback")
    return item
