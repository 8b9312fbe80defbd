"""Train the toy scorer with and without hand tokens on the same split and compare."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from ..evaluation.extract import letter
from ..evaluation.scoring import Prediction, ScoreReport, random_baseline, score
from ..qa.pipeline import QAConfig, clip_questions
from ..qa.templates import TaskCategory
from ..synth import GenConfig, forge_clips
from .adapter import GateConfig
from .features import FeatureConfig, split_by_clip, training_items
from .toy import Batch, ToySequenceModel, TrainConfig, pack, predictions, strip_keys, toy_train

REFERENCE_ONLY = {c.value: (2 if c is TaskCategory.REFERENCE else 0) for c in TaskCategory}


@dataclass(frozen=True)
class AblationConfig:
    seed: int = 0
    n_clips: int = 1100
    test_fraction: float = 0.25
    d_h: int = 64
    steps: int = 300
    lr: float = 0.01
    tau: float = 0.5
    features: FeatureConfig = FeatureConfig()


@dataclass
class TrainedToy:
    model: ToySequenceModel
    losses: list
    report: ScoreReport
    seconds: float


@dataclass
class AblationResult:
    hint_on: TrainedToy
    hint_off: TrainedToy
    chance: ScoreReport
    n_train: int
    n_test: int
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.hint_on.report.average - self.hint_off.report.average

    def to_dict(self) -> dict:
        return {
            "hint_on": self.hint_on.report.to_dict(),
            "hint_off": self.hint_off.report.to_dict(),
            "random": self.chance.to_dict(),
            "gap": self.gap,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "final_loss": {"hint_on": self.hint_on.losses[-1], "hint_off": self.hint_off.losses[-1]},
        }


def reference_split(seed: int, n_clips: int, jobs: int = 1) -> tuple:
    """Single-gesture clips with Reference questions only: ``(clips by id, items)``."""
    gen = replace(GenConfig(), multi_gesture_prob=0.0)
    qa = QAConfig(seed=seed, counts=REFERENCE_ONLY)
    clips, items = {}, []
    for clip in forge_clips(seed, n_clips, gen, jobs=jobs).clips:
        clips[clip.clip_id] = clip
        items.extend(clip_questions(clip, qa).items)
    return clips, items


def score_model(model: ToySequenceModel, batch: Batch, items: Sequence, label: str) -> ScoreReport:
    preds = predictions(model, batch)
    return score(items, [Prediction(it.qa_id, f"({letter(int(p))})") for it, p in zip(items, preds)], label)


def train_toy(
    clips: dict,
    train: Sequence,
    test: Sequence,
    config: AblationConfig = AblationConfig(),
    with_hand: bool = True,
) -> TrainedToy:
    t0 = time.perf_counter()
    gate = GateConfig(config.tau)
    fc = config.features
    btr = pack(training_items(train, clips, gate, fc), fc.d)
    bte = pack(training_items(test, clips, gate, fc), fc.d)
    if not with_hand:
        btr, bte = strip_keys(btr), strip_keys(bte)
    model = ToySequenceModel.init(config.d_h, fc.d, config.seed)
    model, losses = toy_train(model, btr, config.steps, config.seed, TrainConfig(lr=config.lr))
    label = "hint-on" if with_hand else "hint-off"
    return TrainedToy(model, losses, score_model(model, bte, test, label), time.perf_counter() - t0)


def run_ablation(
    config: AblationConfig = AblationConfig(),
    data: Optional[tuple] = None,
    jobs: int = 1,
) -> AblationResult:
    """Both variants share the split, initialization and schedule; only the hand tokens differ."""
    t0 = time.perf_counter()
    clips, items = data if data is not None else reference_split(config.seed, config.n_clips, jobs)
    train, test = split_by_clip(items, config.test_fraction, config.seed)
    on = train_toy(clips, train, test, config, with_hand=True)
    off = train_toy(clips, train, test, config, with_hand=False)
    return AblationResult(on, off, random_baseline(test), len(train), len(test), time.perf_counter() - t0)
