"""Numerical self-checks run by ``deixis adapter check``."""
from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np

from ..errors import SuiteFailure
from .adapter import (
    GELU_C,
    LN_EPS,
    AdapterParams,
    GateConfig,
    adapter_backward,
    adapter_forward,
    flatten_keypoints,
    forward_batch,
)
from .toy import Batch, ToySequenceModel, loss_and_grad

FD_STEP = 1e-5
# below this magnitude entries are held to rtol * FD_FLOOR absolutely: double-precision
# central differences at h = 1e-5 carry about 1e-10 of roundoff
FD_FLOOR = 1e-5


def scalar_forward(params: AdapterParams, K) -> list:
    """Loop-by-loop reimplementation of the adapter; shares no array code with the kernel."""
    x = [float(K[i][j]) for i in range(21) for j in range(3)]
    n = len(x)
    mu = sum(x) / n
    var = sum((v - mu) ** 2 for v in x) / n
    s = math.sqrt(var + LN_EPS)
    ln = [(x[i] - mu) / s * float(params.ln_gain[i]) + float(params.ln_bias[i]) for i in range(n)]
    hidden = []
    for r in range(params.d_h):
        z = 0.0
        for i in range(n):
            z += float(params.W1[r, i]) * ln[i]
        hidden.append(0.5 * z * (1.0 + math.tanh(math.sqrt(2.0 / math.pi) * (z + GELU_C * z * z * z))))
    out = []
    for r in range(params.d):
        acc = 0.0
        for k in range(params.d_h):
            acc += float(params.W2[r, k]) * hidden[k]
        out.append(acc)
    return out


def random_case(rng: np.random.Generator, d_h: int = 4, d: int = 8) -> tuple:
    params = AdapterParams(
        rng.normal(0, 0.5, (d_h, 63)),
        rng.normal(0, 0.5, (d, d_h)),
        rng.normal(1.0, 0.2, 63),
        rng.normal(0.0, 0.2, 63),
    )
    K = rng.normal(0.0, 0.2, (21, 3)) + np.array([0.1, 0.2, 0.4])
    return params, K


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    den = np.maximum(np.maximum(np.abs(a), np.abs(b)), FD_FLOOR)
    return float(np.max(np.abs(a - b) / den)) if a.size else 0.0


def check_forward(n: int = 100, seed: int = 0, atol: float = 1e-9) -> list:
    rng = np.random.default_rng(seed)
    failures = []
    for case in range(n):
        params, K = random_case(rng)
        got = adapter_forward(params, K, 1.0, GateConfig(0.5)).value
        err = float(np.max(np.abs(got - np.array(scalar_forward(params, K)))))
        if not err <= atol:
            failures.append({"suite": "forward", "case": case, "max_abs_err": err})
    return failures


def _fd(f, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    g = np.empty_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        gf[i] = (up - down) / (2 * h)
    return g


def check_backward(n: int = 100, seed: int = 1, rtol: float = 1e-4) -> list:
    rng = np.random.default_rng(seed)
    failures = []
    for case in range(n):
        params, K = random_case(rng)
        g_out = rng.normal(size=params.d)
        grads = adapter_backward(params, K, g_out)
        arrays = {
            "W1": np.array(params.W1), "W2": np.array(params.W2),
            "ln_gain": np.array(params.ln_gain), "ln_bias": np.array(params.ln_bias), "K": np.array(K),
        }

        # unvalidated view over the perturbed arrays keeps thousands of evaluations cheap
        view = SimpleNamespace(**{k: arrays[k] for k in ("W1", "W2", "ln_gain", "ln_bias")})

        def objective():
            H, _ = forward_batch(view, flatten_keypoints(arrays["K"])[None, :])
            return float(g_out @ H[0])

        for name in arrays:
            err = rel_err(getattr(grads, name), _fd(objective, arrays[name]))
            if not err <= rtol:
                failures.append({"suite": "backward", "case": case, "param": name, "max_rel_err": err})
    return failures


def random_batch(rng: np.random.Generator, n_items: int = 3, d: int = 8, rows: int = 6, n_opt: int = 5) -> Batch:
    keys, key_item = [], []
    for n in range(n_items):
        for _ in range(1 + n):
            keys.append((rng.normal(0.0, 0.2, (21, 3)) + np.array([0.1, 0.2, 0.4])).ravel())
            key_item.append(n)
    mask = np.ones((n_items, rows), dtype=bool)
    mask[0, -1] = False
    return Batch(
        rng.normal(size=(n_items, rows, d)),
        mask,
        np.array(keys),
        np.array(key_item),
        rng.normal(size=(n_items, n_opt, d)),
        rng.integers(0, n_opt, size=n_items),
    )


def check_toy_gradient(seed: int = 2, rtol: float = 1e-3, n_models: int = 5) -> list:
    rng = np.random.default_rng(seed)
    failures = []
    for case in range(n_models):
        batch = random_batch(rng)
        model = ToySequenceModel.init(4, 8, int(rng.integers(1 << 30)))
        theta = model.flat() + rng.normal(0, 0.1, model.flat().shape)
        model = model.unflat(theta)
        _, g = loss_and_grad(model, batch)
        fd = _fd(lambda: loss_and_grad(model.unflat(theta), batch)[0], theta)
        err = rel_err(g, fd)
        if not err <= rtol:
            failures.append({"suite": "toy-gradient", "case": case, "max_rel_err": err})
    return failures


def run_suite(n: int = 100, seed: int = 0) -> dict:
    """All adapter checks; raises SuiteFailure listing every failing case."""
    failures = check_forward(n, seed) + check_backward(n, seed + 1) + check_toy_gradient(seed + 2)
    summary = {"forward_cases": n, "backward_cases": n, "toy_models": 5, "failures": len(failures)}
    if failures:
        raise SuiteFailure(f"{len(failures)} adapter check(s) failed", failures)
    return summary
