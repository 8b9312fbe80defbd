import pytest

from deixis.qa.pipeline import QAConfig, clip_questions
from deixis.synth import GenConfig, forge_clips


@pytest.fixture(scope="session")
def forged():
    return forge_clips(11, 40, GenConfig())


@pytest.fixture(scope="session")
def clips(forged):
    return {c.clip_id: c for c in forged.clips}


@pytest.fixture(scope="session")
def dataset(forged):
    cfg = QAConfig(seed=11)
    items = []
    for clip in forged.clips:
        items.extend(clip_questions(clip, cfg).items)
    return items
