"""Training criteria: BCE, per-character cross-entropy, MSE and the ANNr ratio loss."""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import functional as F
from .functional import CLAMP_EPS
from .tensor import Tensor, as_tensor, make_node


def loss_bce(y_pred: Tensor, y, eps: float = CLAMP_EPS) -> Tensor:
    """Mean binary cross-entropy; predictions are clamped to ``[eps, 1-eps]``."""
    y_pred = as_tensor(y_pred)
    y = np.asarray(y, dtype=y_pred.dtype).reshape(y_pred.shape)
    p = np.clip(y_pred.data, eps, 1 - eps)
    inside = (y_pred.data >= eps) & (y_pred.data <= 1 - eps)
    n = y_pred.data.size
    value = np.mean(-y * np.log(p) - (1 - y) * np.log(1 - p))

    def backward(g):
        return (g * inside * (-y / p + (1 - y) / (1 - p)) / n,)

    return make_node(np.asarray(value, dtype=y_pred.dtype), (y_pred,), backward)


def _target_mask(targets: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is None:
        return np.ones(targets.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != targets.shape:
        raise ValueError(f"mask shape {mask.shape} != targets shape {targets.shape}")
    return mask


def _as_batch(targets, probs_shape) -> tuple[np.ndarray, bool]:
    targets = np.asarray(targets, dtype=np.int64)
    single = len(probs_shape) == 2
    if single:
        targets = targets[None, :]
    return targets, single


def loss_ce(probs: Tensor, targets, mask: Optional[np.ndarray] = None, eps: float = CLAMP_EPS) -> Tensor:
    """Mean per-position cross-entropy of predicted distributions against target ids.

    ``probs`` is ``[T, V]`` for one word or ``[B, T, V]`` for a batch; the loss
    of a word is averaged over its valid positions (EOW included) and the
    batch loss averages over words.
    """
    probs = as_tensor(probs)
    targets, single = _as_batch(targets, probs.shape)
    P = probs.data[None] if single else probs.data
    if P.shape[:2] != targets.shape:
        raise ValueError(f"{P.shape[:2]} predictions for targets of shape {targets.shape}")
    valid = _target_mask(targets, None if mask is None else (np.asarray(mask)[None] if single else mask))
    lengths = valid.sum(axis=1)
    if (lengths == 0).any():
        raise ValueError("word with no target positions")
    picked = np.take_along_axis(P, targets[..., None], axis=-1)[..., 0]
    clipped = np.maximum(picked, eps)
    weights = valid / lengths[:, None] / len(targets)
    value = -(np.log(clipped) * weights).sum()

    def backward(g):
        grad = np.zeros_like(P)
        local = -g * weights * (picked >= eps) / clipped
        np.put_along_axis(grad, targets[..., None], local[..., None], axis=-1)
        return (grad[0] if single else grad,)

    return make_node(np.asarray(value, dtype=probs.dtype), (probs,), backward)


def cross_entropy_logits(logits: Tensor, targets, mask: Optional[np.ndarray] = None) -> Tensor:
    """Same quantity as :func:`loss_ce` applied to ``softmax(logits)``, computed stably."""
    logits = as_tensor(logits)
    targets, single = _as_batch(targets, logits.shape)
    Z = logits.data[None] if single else logits.data
    if Z.shape[:2] != targets.shape:
        raise ValueError(f"{Z.shape[:2]} predictions for targets of shape {targets.shape}")
    valid = _target_mask(targets, None if mask is None else (np.asarray(mask)[None] if single else mask))
    lengths = valid.sum(axis=1)
    if (lengths == 0).any():
        raise ValueError("word with no target positions")
    shifted = Z - Z.max(axis=-1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    logp = shifted - logsum
    weights = valid / lengths[:, None] / len(targets)
    value = -(np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0] * weights).sum()

    def backward(g):
        grad = np.exp(logp)
        onehot = np.zeros_like(grad)
        np.put_along_axis(onehot, targets[..., None], 1.0, axis=-1)
        grad = g * (grad - onehot) * weights[..., None]
        return (grad[0] if single else grad,)

    return make_node(np.asarray(value, dtype=logits.dtype), (logits,), backward)


def mse_rows(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared difference over the last axis."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = F.sub(a, b)
    return F.mean(F.mul(diff, diff), axis=-1)


def loss_mse(e_d: Tensor, e_x: Tensor) -> Tensor:
    return F.mean(mse_rows(e_d, e_x))


def batch_shuffle_permutation(n: int, rng: np.random.Generator, max_redraws: int = 10) -> np.ndarray:
    """Uniform permutation of ``range(n)``, redrawn up to ``max_redraws`` times while it has fixed points."""
    if n < 2:
        raise ValueError("batch shuffle needs at least 2 items")
    perm = rng.permutation(n)
    for _ in range(max_redraws):
        if not (perm == np.arange(n)).any():
            break
        perm = rng.permutation(n)
    return perm


def loss_annr(e_d: Tensor, e_x: Tensor, perm) -> Tensor:
    """Mean over the batch of ``(1 + MSE(e_D, e_x)) / (1 + MSE(e_D[perm], e_x))``."""
    e_d, e_x = as_tensor(e_d), as_tensor(e_x)
    if e_d.shape[0] < 2:
        raise ValueError("ANNr loss needs a batch of at least 2 (no shuffle partner)")
    perm = np.asarray(perm)
    if sorted(perm.tolist()) != list(range(e_d.shape[0])):
        raise ValueError("perm is not a permutation of the batch")
    near = mse_rows(e_d, e_x)
    far = mse_rows(F.take(e_d, perm), e_x)
    return F.mean(F.div(F.add(near, 1.0), F.add(far, 1.0)))
