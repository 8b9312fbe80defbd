"""Bundled vocabularies: object categories with attribute value sets, goal affordances, stop-lists."""
import json
from functools import lru_cache
from importlib import resources

ATTRIBUTES = ("color", "material", "shape", "state")


def _read(name: str) -> str:
    return resources.files("deixis").joinpath("data", name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def vocabulary() -> dict:
    return json.loads(_read("vocabulary.json"))


@lru_cache(maxsize=None)
def affordances() -> dict:
    """Goal sentence mapped to the set of categories that satisfy it."""
    return {goal: frozenset(cats) for goal, cats in json.loads(_read("affordances.json")).items()}


@lru_cache(maxsize=None)
def stop_list(name: str) -> tuple:
    return tuple(line for line in _read(name).splitlines() if line.strip())


def categories() -> list:
    return sorted(vocabulary()["categories"])


def attribute_values(category: str, attribute: str) -> list:
    spec = vocabulary()["categories"][category]
    return list(spec["colors"] if attribute == "color" else spec[attribute])


def global_values(attribute: str) -> list:
    """Every value of ``attribute`` across categories, first-seen order."""
    seen = {}
    for cat in categories():
        for v in attribute_values(cat, attribute):
            seen.setdefault(v, None)
    return list(seen)


def opposite(value: str):
    return vocabulary().get("opposites", {}).get(value)
