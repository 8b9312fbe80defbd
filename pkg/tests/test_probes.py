import pytest

from deixis.errors import FlagViolation
from deixis.evaluation import (
    Answerer,
    BlindAnswerer,
    ChoicesOnlyAnswerer,
    Flags,
    GeometricOracle,
    RandomAnswerer,
    bias_probe,
    random_baseline,
)
from deixis.qa import QAItem, TaskCategory


def five_option_items(n):
    return [QAItem(f"q{i}", "c0", TaskCategory.REFERENCE, "What is this?", tuple("abcde"), i % 5, ("m_0",), "What is <object0>?")
            for i in range(n)]


def test_random_probe_near_chance():
    rep = bias_probe(five_option_items(10_000), RandomAnswerer(), seed=0)
    assert abs(rep.accuracy("Reference") - 20.0) <= 1.5


def test_random_probe_seeded():
    data = five_option_items(200)
    assert bias_probe(data, RandomAnswerer(), seed=3) == bias_probe(data, RandomAnswerer(), seed=3)


class Peeker(Answerer):
    flags = Flags(False, False, True)
    name = "peeker"

    def answer(self, view):
        return view.question


class ClipPeeker(Answerer):
    flags = Flags(False, True, True)
    name = "clip-peeker"

    def answer(self, view):
        view.clip
        return "A"


def test_masked_question_raises():
    with pytest.raises(FlagViolation):
        bias_probe(five_option_items(3), Peeker())


def test_masked_clip_raises(clips):
    with pytest.raises(FlagViolation):
        bias_probe(five_option_items(3), ClipPeeker(), clips=clips)


def test_choices_only_never_sees_question():
    assert ChoicesOnlyAnswerer.flags == Flags(False, False, True)
    assert BlindAnswerer.flags.sees_video is False


def test_oracle_perfect_on_fixture(dataset, clips):
    rep = bias_probe(dataset, GeometricOracle(), clips=clips)
    assert all(v["accuracy"] == 100.0 for v in rep.per_category.values())
    assert rep.invalid_count == 0


@pytest.mark.parametrize("answerer", [BlindAnswerer(), ChoicesOnlyAnswerer()], ids=["blind", "choices-only"])
def test_text_only_probes_near_chance(dataset, answerer):
    rep = bias_probe(dataset, answerer)
    chance = random_baseline(dataset)
    for cat, v in rep.per_category.items():
        # about 40 items per category puts 3 sigma near 20 points; the acceptance run checks ±7 on a large set
        assert abs(v["accuracy"] - chance.per_category[cat]["accuracy"]) <= 20, cat
