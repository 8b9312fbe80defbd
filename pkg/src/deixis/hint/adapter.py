"""Keypoint adapter: H = W2 · GeLU(W1 · LN(flatten K)), emitted only when the detector is confident."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigInvalid, GateClosed, ShapeMismatch

N_IN = 63
LN_EPS = 1e-5
GELU_C = 0.044715
_SQRT_2_PI = math.sqrt(2.0 / math.pi)
FORMAT_VERSION = 1


@dataclass(frozen=True)
class GateConfig:
    tau: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigInvalid(f"tau must lie in [0, 1], got {self.tau}")

    def open(self, confidence: float) -> bool:
        return confidence >= self.tau


@dataclass(frozen=True, eq=False)
class AdapterParams:
    W1: np.ndarray
    W2: np.ndarray
    ln_gain: np.ndarray
    ln_bias: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("W1", "W2", "ln_gain", "ln_bias"):
            a = np.array(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(a)):
                raise ShapeMismatch(f"{name} has non-finite entries")
            a.setflags(write=False)
            arrays[name] = a
        W1, W2 = arrays["W1"], arrays["W2"]
        if W1.ndim != 2 or W1.shape[1] != N_IN or W1.shape[0] < 1:
            raise ShapeMismatch(f"W1 must be d_h x 63, got {W1.shape}")
        if W2.ndim != 2 or W2.shape[1] != W1.shape[0] or W2.shape[0] < 1:
            raise ShapeMismatch(f"W2 must be d x {W1.shape[0]}, got {W2.shape}")
        for name in ("ln_gain", "ln_bias"):
            if arrays[name].shape != (N_IN,):
                raise ShapeMismatch(f"{name} must have length 63, got {arrays[name].shape}")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    @property
    def d_h(self) -> int:
        return self.W1.shape[0]

    @property
    def d(self) -> int:
        return self.W2.shape[0]

    @classmethod
    def init(cls, d_h: int = 64, d: int = 128, seed: int = 0) -> "AdapterParams":
        rng = np.random.default_rng(seed)
        return cls(
            W1=rng.normal(0.0, 1.0 / math.sqrt(N_IN), size=(d_h, N_IN)),
            W2=rng.normal(0.0, 1.0 / math.sqrt(d_h), size=(d, d_h)),
            ln_gain=np.ones(N_IN),
            ln_bias=np.zeros(N_IN),
        )

    def replace(self, **arrays) -> "AdapterParams":
        fields = {"W1": self.W1, "W2": self.W2, "ln_gain": self.ln_gain, "ln_bias": self.ln_bias}
        fields.update(arrays)
        return AdapterParams(**fields)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "d_h": self.d_h,
            "d": self.d,
            "W1": self.W1.ravel().tolist(),
            "W2": self.W2.ravel().tolist(),
            "ln_gain": self.ln_gain.tolist(),
            "ln_bias": self.ln_bias.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AdapterParams":
        if obj.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format {obj.get('format_version')!r}")
        d_h, d = int(obj["d_h"]), int(obj["d"])
        try:
            W1 = np.asarray(obj["W1"], dtype=np.float64).reshape(d_h, N_IN)
            W2 = np.asarray(obj["W2"], dtype=np.float64).reshape(d, d_h)
        except ValueError as exc:
            raise ShapeMismatch(f"checkpoint weights do not match d_h={d_h}, d={d}") from exc
        return cls(W1, W2, np.asarray(obj["ln_gain"]), np.asarray(obj["ln_bias"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True, eq=False)
class HandIntentToken:
    """``value`` is H, or None for the absent token; ``keypoints`` records the 21x3 input that produced it."""

    value: Optional[np.ndarray] = None
    keypoints: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.keypoints is not None:
            k = np.array(self.keypoints, dtype=np.float64).reshape(21, 3)
            k.setflags(write=False)
            object.__setattr__(self, "keypoints", k)
        if self.value is not None:
            v = np.array(self.value, dtype=np.float64)
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise ValueError("hand intent token must be a finite vector")
            v.setflags(write=False)
            object.__setattr__(self, "value", v)

    @property
    def present(self) -> bool:
        return self.value is not None


ABSENT = HandIntentToken(None)


@dataclass(frozen=True, eq=False)
class AdapterGrads:
    W1: np.ndarray
    W2: np.ndarray
    ln_gain: np.ndarray
    ln_bias: np.ndarray
    K: np.ndarray


def _gelu_tanh(x):
    x2 = x * x
    return np.tanh(_SQRT_2_PI * x * (1.0 + GELU_C * x2))


def gelu(x, t=None):
    """Tanh-approximated GeLU; ``t`` may carry a precomputed inner tanh."""
    if t is None:
        t = _gelu_tanh(x)
    return 0.5 * x * (1.0 + t)


def gelu_grad(x, t=None):
    if t is None:
        t = _gelu_tanh(x)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * _SQRT_2_PI * (1.0 + 3.0 * GELU_C * x * x)


def layer_norm(x, gain, bias, eps: float = LN_EPS):
    """Affine layer norm over the last axis with population variance."""
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    return xc / np.sqrt(var + eps) * gain + bias


def flatten_keypoints(K, normalize: bool = False) -> np.ndarray:
    """Keypoint-major flattening (k0.x, k0.y, k0.z, k1.x, ...); ``normalize`` subtracts the wrist."""
    K = np.asarray(K, dtype=np.float64)
    if K.shape[-2:] != (21, 3):
        raise ShapeMismatch(f"keypoints must be 21 x 3, got {K.shape}")
    if normalize:
        K = K - K[..., :1, :]
    return K.reshape(*K.shape[:-2], N_IN)


def forward_batch(params: AdapterParams, X: np.ndarray) -> tuple:
    """Adapter on rows of flattened keypoints; returns ``(H, cache)``."""
    mu = X.mean(axis=-1, keepdims=True)
    xc = X - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    ln = xhat * params.ln_gain + params.ln_bias
    z1 = ln @ params.W1.T
    t = _gelu_tanh(z1)
    a = gelu(z1, t)
    H = a @ params.W2.T
    return H, (xhat, inv, ln, z1, t, a)


def backward_batch(params: AdapterParams, cache: tuple, dH: np.ndarray) -> AdapterGrads:
    """Gradients of sum(dH * H) summed over the batch rows; ``K`` holds per-row input gradients."""
    xhat, inv, ln, z1, t, a = cache
    gW2 = dH.T @ a
    dz1 = (dH @ params.W2) * gelu_grad(z1, t)
    gW1 = dz1.T @ ln
    dln = dz1 @ params.W1
    g_gain = (dln * xhat).sum(axis=0)
    g_bias = dln.sum(axis=0)
    dxhat = dln * params.ln_gain
    dX = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return AdapterGrads(gW1, gW2, g_gain, g_bias, dX)


def adapter_forward(
    params: AdapterParams,
    K,
    c: float,
    gate: GateConfig = GateConfig(),
    normalize: bool = False,
) -> HandIntentToken:
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"confidence {c} outside [0, 1]")
    x = flatten_keypoints(K, normalize)
    if not np.all(np.isfinite(x)):
        raise ValueError("keypoints must be finite")
    if not gate.open(c):
        return ABSENT
    H, _ = forward_batch(params, x[None, :])
    return HandIntentToken(H[0], np.asarray(K, dtype=np.float64))


def adapter_backward(
    params: AdapterParams,
    K,
    grad_out,
    c: float = 1.0,
    gate: GateConfig = GateConfig(),
    normalize: bool = False,
) -> AdapterGrads:
    """Analytic gradients of <grad_out, H> for one frame."""
    if not gate.open(c):
        raise GateClosed(f"confidence {c} below tau {gate.tau}: no token, no gradient")
    g = np.asarray(grad_out, dtype=np.float64)
    if g.shape != (params.d,):
        raise ShapeMismatch(f"grad_out must have length {params.d}, got {g.shape}")
    x = flatten_keypoints(K, normalize)
    _, cache = forward_batch(params, x[None, :])
    grads = backward_batch(params, cache, g[None, :])
    return AdapterGrads(grads.W1, grads.W2, grads.ln_gain, grads.ln_bias, grads.K[0].reshape(21, 3))
