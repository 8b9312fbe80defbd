import random

import pytest

from deixis.errors import UnknownQaId
from deixis.evaluation import Prediction, random_baseline, score
from deixis.qa import QAItem, TaskCategory

FIVE = ("a", "b", "c", "d", "e")


def item(qid, category, answer_index=0, options=FIVE):
    return QAItem(qid, "c0", category, "What is this?", options, answer_index, ("mug_0",), "What is <object0>?")


SIX = [
    item("r", TaskCategory.REFERENCE, 1),
    item("t", TaskCategory.TEMPORAL, 2),
    item("c", TaskCategory.COUNTING, 0),
    item("s", TaskCategory.SPATIAL, 3),
    item("a", TaskCategory.ATTRIBUTE, 4),
    item("f", TaskCategory.FEEDBACK, 1, ("Yes", "No")),
]


def test_all_correct():
    preds = [Prediction(i.qa_id, "ABCDE"[i.answer_index]) for i in SIX]
    rep = score(SIX, preds)
    assert all(v["accuracy"] == 100.0 for v in rep.per_category.values())
    assert rep.average == 100.0 and rep.invalid_count == 0


def test_all_invalid():
    rep = score(SIX, [Prediction(i.qa_id, "no idea") for i in SIX])
    assert all(v["accuracy"] == 0.0 for v in rep.per_category.values())
    assert rep.average == 0.0 and rep.invalid_count == 6


def test_missing_predictions_are_invalid():
    rep = score(SIX, [])
    assert rep.invalid_count == 6 and rep.average == 0.0


def test_hand_scored_fixture():
    # every other category answered correctly; the rest get a wrong but parseable letter
    raw = {"r": "(B)", "t": "(A)", "c": "Answer: A", "s": "E.", "a": "<answer>E</answer>", "f": "A"}
    rep = score(SIX, [Prediction(k, v) for k, v in raw.items()])
    want = {"Reference": 100.0, "Temporal": 0.0, "Counting": 100.0, "Spatial": 0.0, "Attribute": 100.0, "Feedback": 0.0}
    assert {k: v["accuracy"] for k, v in rep.per_category.items()} == want
    assert rep.average == 50.0 and rep.invalid_count == 0


def test_average_is_unweighted():
    data = [item(f"r{i}", TaskCategory.REFERENCE) for i in range(9)] + [item("c", TaskCategory.COUNTING)]
    preds = [Prediction(f"r{i}", "A") for i in range(9)] + [Prediction("c", "B")]
    rep = score(data, preds)
    assert rep.average == 50.0


def test_unknown_id():
    with pytest.raises(UnknownQaId):
        score(SIX, [Prediction("zzz", "A")])


def test_conflicting_duplicates():
    with pytest.raises(ValueError):
        score(SIX, [Prediction("r", "A"), Prediction("r", "B")])


def test_permutation_invariant():
    preds = [Prediction(i.qa_id, x) for i, x in zip(SIX, "BACDEA")]
    base = score(SIX, preds)
    rng = random.Random(0)
    for _ in range(10):
        rng.shuffle(preds)
        assert score(SIX, preds) == base


def test_random_baseline_values():
    rep = random_baseline(SIX)
    assert rep.accuracy("Reference") == 20.0
    assert rep.accuracy("Feedback") == 50.0
    mixed = [item("x", "Spatial"), item("y", "Spatial"), item("z", "Spatial", options=("Yes", "No"))]
    assert random_baseline(mixed).accuracy("Spatial") == pytest.approx(30.0, abs=1e-12)


def test_random_baseline_empty():
    with pytest.raises(ValueError):
        random_baseline([])
