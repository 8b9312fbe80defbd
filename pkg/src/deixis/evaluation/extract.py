"""Option-letter extraction from free-form model output.

The ladder: whole-string letter, cleaning (answer markup, trailing control
tokens, boilerplate prefixes) and a recheck, then three regexes tried in
order. Only capital letters within the option range ever match.
"""
from __future__ import annotations

import re
import string
from functools import lru_cache
from typing import Optional

from .. import vocab

_ANSWER_TAG = re.compile(r"<answer>(.*?)</answer>", re.DOTALL | re.IGNORECASE)


def _letters(num_options: int) -> str:
    if not 2 <= num_options <= 26:
        raise ValueError(f"num_options must be in 2..26, got {num_options}")
    return f"A-{string.ascii_uppercase[num_options - 1]}"


@lru_cache(maxsize=None)
def _ladder(num_options: int) -> tuple:
    cls = _letters(num_options)
    return (
        re.compile(rf"\(([{cls}])\)"),
        re.compile(rf"(?<![A-Za-z])([{cls}])[.)\]]"),
        re.compile(rf"(?i:answer)\s*:\s*\(?([{cls}])\)?\s*\.?\s*$"),
    )


def _single(text: str, num_options: int) -> Optional[int]:
    t = text.strip()
    if len(t) == 1 and "A" <= t <= string.ascii_uppercase[num_options - 1]:
        return ord(t) - ord("A")
    return None


def clean_output(raw: str) -> str:
    text = raw.strip()
    m = _ANSWER_TAG.search(text)
    if m:
        text = m.group(1).strip()
    tokens = vocab.stop_list("control_tokens.txt")
    changed = True
    while changed:
        changed = False
        for tok in tokens:
            if text.endswith(tok):
                text = text[: -len(tok)].rstrip()
                changed = True
    prefixes = sorted(vocab.stop_list("boilerplate_prefixes.txt"), key=len, reverse=True)
    changed = True
    while changed:
        changed = False
        for pre in prefixes:
            if text.lower().startswith(pre.lower()):
                text = text[len(pre):].lstrip()
                changed = True
    return text


def extract_choice(raw: str, num_options: int) -> Optional[int]:
    """Zero-based option index named by ``raw``, or None when no rule matches."""
    _letters(num_options)
    if raw is None:
        return None
    hit = _single(raw, num_options)
    if hit is not None:
        return hit
    text = clean_output(raw)
    hit = _single(text, num_options)
    if hit is not None:
        return hit
    for rx in _ladder(num_options):
        m = rx.search(text)
        if m:
            return ord(m.group(1)) - ord("A")
    return None


def letter(index: int) -> str:
    return string.ascii_uppercase[index]
