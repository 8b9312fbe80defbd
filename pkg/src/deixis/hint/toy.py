"""A minimal causal scorer over interleaved sequences.

The answer position pools every earlier visual row and question token with a
single softmax attention whose query is ``q0`` plus the mean of the earlier
hand intent tokens. Options are scored bilinearly against the pooled context:
``score_o = e_o . B ctx``. Everything after the answer position is ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import WidthMismatch
from .adapter import AdapterGrads, AdapterParams, backward_batch, flatten_keypoints, forward_batch
from .sequence import ANSWER, KEY, QUESTION, VIS, InterleavedSequence


@dataclass(frozen=True, eq=False)
class ToySequenceModel:
    adapter: AdapterParams
    q0: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        q0 = np.array(self.q0, dtype=np.float64)
        B = np.array(self.B, dtype=np.float64)
        d = self.adapter.d
        if q0.shape != (d,) or B.shape != (d, d):
            raise WidthMismatch(f"q0 and B must match adapter width {d}")
        q0.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "B", B)

    @property
    def d(self) -> int:
        return self.adapter.d

    @classmethod
    def init(cls, d_h: int = 64, d: int = 128, seed: int = 0) -> "ToySequenceModel":
        return cls(AdapterParams.init(d_h, d, seed), np.zeros(d), np.eye(d))

    def flat(self) -> np.ndarray:
        a = self.adapter
        return np.concatenate([a.W1.ravel(), a.W2.ravel(), a.ln_gain, a.ln_bias, self.q0, self.B.ravel()])

    def unflat(self, theta: np.ndarray) -> "ToySequenceModel":
        a = self.adapter
        shapes = [a.W1.shape, a.W2.shape, a.ln_gain.shape, a.ln_bias.shape, self.q0.shape, self.B.shape]
        parts, k = [], 0
        for s in shapes:
            n = int(np.prod(s))
            parts.append(theta[k:k + n].reshape(s))
            k += n
        return ToySequenceModel(AdapterParams(*parts[:4]), parts[4], parts[5])


@dataclass
class Batch:
    """Padded arrays for many items.

    ``pool`` rows beyond ``pool_mask`` are padding; ``keys`` holds every raw
    keypoint set preceding an answer, with ``key_item`` naming its item.
    """

    pool: np.ndarray  # N x P x d
    pool_mask: np.ndarray  # N x P bool
    keys: np.ndarray  # M x 63
    key_item: np.ndarray  # M
    options: np.ndarray  # N x O x d
    answers: np.ndarray  # N
    n_keys: np.ndarray = field(init=False)
    key_bounds: np.ndarray = field(init=False)

    def __post_init__(self):
        order = np.argsort(self.key_item, kind="stable")
        self.keys = self.keys[order]
        self.key_item = self.key_item[order]
        counts = np.bincount(self.key_item, minlength=len(self.pool))
        self.n_keys = counts.astype(np.float64)
        self.key_bounds = np.concatenate([[0], np.cumsum(counts)])

    def __len__(self) -> int:
        return len(self.pool)

    def subset(self, idx) -> "Batch":
        idx = np.asarray(idx, dtype=np.int64)
        remap = -np.ones(len(self), dtype=np.int64)
        remap[idx] = np.arange(len(idx))
        keep = remap[self.key_item] >= 0
        return Batch(
            self.pool[idx], self.pool_mask[idx], self.keys[keep], remap[self.key_item[keep]],
            self.options[idx], self.answers[idx],
        )


def _answer_position(seq: InterleavedSequence) -> int:
    for i, el in enumerate(seq.elements):
        if el.kind == ANSWER:
            return i
    return len(seq.elements)


def _prefix(seq: InterleavedSequence, d: int) -> tuple:
    """Pool rows and key inputs visible to the first answer position."""
    rows, keys = [], []
    for el in seq.elements[: _answer_position(seq)]:
        if el.kind == VIS:
            rows.extend(el.payload.tokens)
        elif el.kind == QUESTION:
            rows.append(np.asarray(el.payload, dtype=np.float64))
        elif el.kind == KEY:
            if el.payload.keypoints is None:
                raise ValueError(f"key token for frame {el.frame} carries no keypoints for the adapter")
            keys.append(el.payload.keypoints)
    for r in rows:
        if r.shape != (d,):
            raise WidthMismatch(f"sequence token width {r.shape} does not match model width {d}")
    return rows, keys


def pack(items: Sequence[tuple], d: int) -> Batch:
    """``items`` are ``(seq, option_embeddings, answer_index)`` triples."""
    prefixes = [_prefix(seq, d) for seq, _, _ in items]
    P = max(1, max(len(rows) for rows, _ in prefixes))
    O = max(len(opts) for _, opts, _ in items)
    N = len(items)
    pool = np.zeros((N, P, d))
    mask = np.zeros((N, P), dtype=bool)
    options = np.zeros((N, O, d))
    keys, key_item = [], []
    for n, ((rows, ks), (_, opts, _)) in enumerate(zip(prefixes, items)):
        if rows:
            pool[n, : len(rows)] = rows
            mask[n, : len(rows)] = True
        E = np.asarray(opts, dtype=np.float64)
        if E.ndim != 2 or E.shape[1] != d or len(E) != O:
            raise WidthMismatch(f"option embeddings must be {O} x {d}, got {E.shape}")
        options[n] = E
        for k in ks:
            keys.append(flatten_keypoints(k.reshape(21, 3)))
            key_item.append(n)
    answers = np.array([a for _, _, a in items], dtype=np.int64)
    return Batch(
        pool, mask, np.array(keys).reshape(-1, 63), np.array(key_item, dtype=np.int64), options, answers,
    )


def _forward(model: ToySequenceModel, batch: Batch):
    if len(batch.keys):
        H, acache = forward_batch(model.adapter, batch.keys)
    else:
        H, acache = np.zeros((0, model.d)), None
    cs = np.concatenate([np.zeros((1, model.d)), np.cumsum(H, axis=0)])
    hsum = cs[batch.key_bounds[1:]] - cs[batch.key_bounds[:-1]]
    denom = np.maximum(batch.n_keys, 1.0)[:, None]
    q = model.q0 + hsum / denom
    logits = np.matmul(batch.pool, q[:, :, None])[:, :, 0]
    logits = np.where(batch.pool_mask, logits, -np.inf)
    m = logits.max(axis=1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    w = np.exp(logits - m)
    z = w.sum(axis=1, keepdims=True)
    att = np.divide(w, z, out=np.zeros_like(w), where=z > 0)
    ctx = np.matmul(att[:, None, :], batch.pool)[:, 0, :]
    Bctx = ctx @ model.B.T
    scores = np.matmul(batch.options, Bctx[:, :, None])[:, :, 0]
    return scores, (H, acache, denom, q, att, ctx)


def log_softmax(scores: np.ndarray) -> np.ndarray:
    m = scores.max(axis=-1, keepdims=True)
    return scores - m - np.log(np.exp(scores - m).sum(axis=-1, keepdims=True))


def batch_scores(model: ToySequenceModel, batch: Batch) -> np.ndarray:
    """Per-option log-probabilities, N x O."""
    scores, _ = _forward(model, batch)
    return log_softmax(scores)


def toy_score(model: ToySequenceModel, seq: InterleavedSequence, option_embeddings) -> np.ndarray:
    """Log-probabilities of each option at the first answer position of ``seq``.

    Key tokens are re-encoded from their recorded keypoints by the model's own adapter.
    """
    E = np.asarray(option_embeddings, dtype=np.float64)
    if E.ndim != 2 or E.shape[1] != model.d:
        raise WidthMismatch(f"option embeddings must be n x {model.d}, got {E.shape}")
    return batch_scores(model, pack([(seq, E, 0)], model.d))[0]


def loss_and_grad(model: ToySequenceModel, batch: Batch) -> tuple:
    """Mean cross-entropy over the batch and its gradient as a flat vector (same layout as ``model.flat``)."""
    scores, (H, acache, denom, q, att, ctx) = _forward(model, batch)
    lp = log_softmax(scores)
    N = len(batch)
    loss = -lp[np.arange(N), batch.answers].mean()
    g = np.exp(lp)
    g[np.arange(N), batch.answers] -= 1.0
    g /= N
    dBctx = np.matmul(g[:, None, :], batch.options)[:, 0, :]
    gB = dBctx.T @ ctx
    dctx = dBctx @ model.B
    xdot = np.matmul(batch.pool, dctx[:, :, None])[:, :, 0]
    dlogit = att * (xdot - (att * xdot).sum(axis=1, keepdims=True))
    dq = np.matmul(dlogit[:, None, :], batch.pool)[:, 0, :]
    gq0 = dq.sum(axis=0)
    a = model.adapter
    if acache is not None:
        dH = (dq / denom)[batch.key_item]
        ag = backward_batch(a, acache, dH)
    else:
        ag = AdapterGrads(np.zeros_like(a.W1), np.zeros_like(a.W2), np.zeros(63), np.zeros(63), None)
    flat = np.concatenate([ag.W1.ravel(), ag.W2.ravel(), ag.ln_gain, ag.ln_bias, gq0, gB.ravel()])
    return float(loss), flat


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_noise: float = 0.0


def toy_train(
    model: ToySequenceModel,
    dataset: Batch,
    epochs: int = 200,
    seed: int = 0,
    config: TrainConfig = TrainConfig(),
) -> tuple:
    """Full-batch Adam; a step that would raise the loss is retried at half the learning rate.

    Returns ``(model, losses)``. The loss trace is non-increasing by construction.
    ``seed`` only matters when ``config.init_noise`` perturbs the starting point.
    """
    if len(dataset) == 0:
        raise ValueError("training set is empty")
    theta = model.flat().copy()
    if config.init_noise > 0:
        theta += np.random.default_rng(seed).normal(0.0, config.init_noise, theta.shape)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    lr = config.lr
    loss, grad = loss_and_grad(model.unflat(theta), dataset)
    trace = [loss]
    for step in range(1, epochs + 1):
        m = config.beta1 * m + (1 - config.beta1) * grad
        v = config.beta2 * v + (1 - config.beta2) * grad * grad
        mhat = m / (1 - config.beta1 ** step)
        vhat = v / (1 - config.beta2 ** step)
        direction = mhat / (np.sqrt(vhat) + config.eps)
        for _ in range(20):
            cand = theta - lr * direction
            new_loss, new_grad = loss_and_grad(model.unflat(cand), dataset)
            if math.isfinite(new_loss) and new_loss <= loss:
                break
            lr *= 0.5
        else:
            break
        theta, loss, grad = cand, new_loss, new_grad
        trace.append(loss)
        lr = min(config.lr, lr * 1.1)
    return model.unflat(theta), trace


def accuracy(model: ToySequenceModel, batch: Batch) -> float:
    pred = batch_scores(model, batch).argmax(axis=1)
    return float((pred == batch.answers).mean())


def predictions(model: ToySequenceModel, batch: Batch) -> np.ndarray:
    return batch_scores(model, batch).argmax(axis=1)


def strip_keys(batch: Batch) -> Batch:
    """The same items with every hand token removed."""
    return Batch(batch.pool, batch.pool_mask, np.zeros((0, 63)), np.zeros(0, dtype=np.int64), batch.options, batch.answers)
