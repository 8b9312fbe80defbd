from .extract import clean_output, extract_choice, letter
from .probes import (
    BUILTIN,
    Answerer,
    BlindAnswerer,
    ChoicesOnlyAnswerer,
    Flags,
    GeometricOracle,
    RandomAnswerer,
    bias_probe,
    run_answerer,
)
from .sampling import frame_sample
from .scoring import Prediction, ScoreReport, random_baseline, score

__all__ = [
    "BUILTIN", "Answerer", "BlindAnswerer", "ChoicesOnlyAnswerer", "Flags", "GeometricOracle",
    "Prediction", "RandomAnswerer", "ScoreReport", "bias_probe", "clean_output", "extract_choice",
    "frame_sample", "letter", "random_baseline", "run_answerer", "score",
]
