from .adapter import (
    ABSENT,
    AdapterGrads,
    AdapterParams,
    GateConfig,
    HandIntentToken,
    adapter_backward,
    adapter_forward,
    flatten_keypoints,
    gelu,
    layer_norm,
)
from .sequence import InterleavedSequence, VisualTokenBlock, interleave, token_overhead
from .toy import ToySequenceModel, toy_score, toy_train

__all__ = [
    "ABSENT", "AdapterGrads", "AdapterParams", "GateConfig", "HandIntentToken", "InterleavedSequence",
    "ToySequenceModel", "VisualTokenBlock", "adapter_backward", "adapter_forward", "flatten_keypoints",
    "gelu", "interleave", "layer_norm", "token_overhead", "toy_score", "toy_train",
]
