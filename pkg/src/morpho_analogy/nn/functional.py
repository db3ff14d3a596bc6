"""Differentiable ops over :class:`Tensor`.

Every op computes its forward pass in numpy and registers a closure that
maps the output gradient to one gradient per input (``None`` for inputs that
are constants).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .tensor import Tensor, as_tensor, make_node

CLAMP_EPS = 1e-7


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------- arithmetic

def _pair(a, b) -> tuple[Tensor, Tensor]:
    # constants take the dtype of the tensor operand so float32 graphs stay float32
    if not isinstance(a, Tensor) and isinstance(b, Tensor):
        a = Tensor(np.asarray(a, dtype=b.dtype))
    elif not isinstance(b, Tensor) and isinstance(a, Tensor):
        b = Tensor(np.asarray(b, dtype=a.dtype))
    return as_tensor(a), as_tensor(b)


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    return make_node(
        a.data + b.data, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    return make_node(
        a.data - b.data, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    return make_node(
        a.data * b.data, (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = a.data / b.data

    def backward(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * out / b.data, b.shape))

    return make_node(out, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b`` where ``b`` is 2-D and ``a`` has any number of leading dims."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != b.shape[0] or b.data.ndim != 2:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        ga = g @ b.data.T
        gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return make_node(a.data @ b.data, (a, b), backward)


def affine(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """Fully connected layer ``x W + b`` over the last axis of ``x``."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    if x.shape[-1] != W.shape[0] or W.shape[1:] != b.shape:
        raise ValueError(f"affine shape mismatch: x{x.shape} W{W.shape} b{b.shape}")

    def backward(g):
        g2 = g.reshape(-1, g.shape[-1])
        gW = x.data.reshape(-1, x.shape[-1]).T @ g2
        return g @ W.data.T, gW, g2.sum(axis=0)

    return make_node(x.data @ W.data + b.data, (x, W, b), backward)


# --------------------------------------------------------------- activations

def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return make_node(np.where(mask, x.data, 0).astype(x.dtype), (x,), lambda g: (g * mask,))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    s = _sigmoid(x.data)
    return make_node(s, (x,), lambda g: (g * s * (1.0 - s),))


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    t = np.tanh(x.data)
    return make_node(t, (x,), lambda g: (g * (1.0 - t * t),))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return make_node(s, (x,), backward)


def log(x: Tensor, eps: float = CLAMP_EPS) -> Tensor:
    """Natural log with the input clamped to ``[eps, inf)``."""
    x = as_tensor(x)
    clipped = np.maximum(x.data, eps)
    inside = x.data >= eps
    return make_node(np.log(clipped), (x,), lambda g: (g * inside / clipped,))


# ------------------------------------------------------------------- shaping

def getitem(x: Tensor, index) -> Tensor:
    x = as_tensor(x)

    basic = all(isinstance(i, (int, slice, type(None), type(Ellipsis)))
                for i in (index if isinstance(index, tuple) else (index,)))

    def backward(g):
        full = np.zeros_like(x.data)
        if basic:
            full[index] = g
        else:
            np.add.at(full, index, g)
        return (full,)

    return make_node(x.data[index], (x,), backward)


def take(x: Tensor, indices) -> Tensor:
    """Gather rows (axis 0); repeated indices accumulate gradient."""
    x = as_tensor(x)
    idx = np.asarray(indices, dtype=np.int64)

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx.reshape(-1), g.reshape((-1,) + x.shape[1:]))
        return (full,)

    return make_node(x.data[idx], (x,), backward)


def reshape(x: Tensor, shape) -> Tensor:
    x = as_tensor(x)
    return make_node(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes=None) -> Tensor:
    x = as_tensor(x)
    inverse = None if axes is None else np.argsort(axes)
    return make_node(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_node(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return make_node(np.stack([t.data for t in tensors], axis=axis), tensors, backward)


def sum(x: Tensor, axis=None) -> Tensor:  # noqa: A001 - mirrors numpy
    x = as_tensor(x)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_node(np.asarray(x.data.sum(axis=axis)), (x,), backward)


def mean(x: Tensor, axis=None) -> Tensor:
    x = as_tensor(x)
    count = x.data.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(sum(x, axis), np.asarray(1.0 / count, dtype=x.dtype))


def reverse_padded(x: Tensor, lengths) -> Tensor:
    """Reverse each row's first ``lengths[b]`` steps along axis 1; padding stays zero."""
    x = as_tensor(x)
    lengths = np.asarray(lengths)
    B, T = x.shape[:2]
    src = np.zeros((B, T), dtype=np.int64)
    valid = np.arange(T)[None, :] < lengths[:, None]
    src[valid] = (lengths[:, None] - 1 - np.arange(T)[None, :])[valid]
    rows = np.arange(B)[:, None]
    mask = valid.reshape(valid.shape + (1,) * (x.data.ndim - 2))
    out = np.where(mask, x.data[rows, src], 0).astype(x.dtype)

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, (rows, src), np.where(mask, g, 0))
        return (full,)

    return make_node(out, (x,), backward)


# --------------------------------------------------------------- sequence ops

def conv_over_chars(E: Tensor, filters: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Full-width 1-D convolution over character embeddings, stride 1.

    ``E`` is ``[..., length, m]`` and ``filters`` is ``[w*m, n_filters]``; window
    ``t`` is the row-major flattening of ``E[t:t+w]``. Output is
    ``[..., length-w+1, n_filters]``.
    """
    E, filters = as_tensor(E), as_tensor(filters)
    L, m = E.shape[-2:]
    wm, nf = filters.shape
    if wm % m:
        raise ValueError(f"filter rows {wm} not a multiple of embedding dim {m}")
    w = wm // m
    if L < w:
        raise ValueError(f"sequence of length {L} shorter than filter width {w}; pad first")
    T = L - w + 1
    windows = np.lib.stride_tricks.sliding_window_view(E.data, w, axis=-2)  # [..., T, m, w]
    unfolded = np.swapaxes(windows, -1, -2).reshape(E.shape[:-2] + (T, wm))
    out = unfolded @ filters.data
    parents: tuple[Tensor, ...] = (E, filters)
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data
        parents = parents + (bias,)

    def backward(g):
        gU = (g @ filters.data.T).reshape(E.shape[:-2] + (T, w, m))
        gE = np.zeros_like(E.data)
        for k in range(w):
            gE[..., k:k + T, :] += gU[..., :, k, :]
        gF = unfolded.reshape(-1, wm).T @ g.reshape(-1, nf)
        grads = [gE, gF]
        if bias is not None:
            grads.append(g.reshape(-1, nf).sum(axis=0))
        return grads

    return make_node(out, parents, backward)


def max_over_time(X: Tensor, valid: Optional[np.ndarray] = None) -> Tensor:
    """Per-filter maximum over positions (axis -2); ties go to the first position.

    ``valid`` is an optional boolean ``[..., T]`` mask of positions allowed to win.
    """
    X = as_tensor(X)
    if X.shape[-2] == 0:
        raise ValueError("max_over_time on an empty sequence")
    data = X.data
    if valid is not None:
        valid = np.asarray(valid, dtype=bool)
        if not valid.any(axis=-1).all():
            raise ValueError("every sequence needs at least one valid position")
        data = np.where(valid[..., None], data, -np.inf)
    arg = np.argmax(data, axis=-2)  # numpy returns the first maximal index
    out = np.take_along_axis(X.data, arg[..., None, :], axis=-2)[..., 0, :]

    def backward(g):
        full = np.zeros_like(X.data)
        np.put_along_axis(full, arg[..., None, :], g[..., None, :], axis=-2)
        return (full,)

    return make_node(out, (X,), backward)


def lstm_step(x: Tensor, h: Tensor, c: Tensor, W: Tensor, b: Tensor,
              mask: Optional[np.ndarray] = None) -> Tensor:
    """One LSTM step; returns ``concat(h', c')`` of shape ``[B, 2H]``.

    ``W`` is ``[in + H, 4H]`` with gate blocks ordered input, forget, candidate,
    output. Rows where ``mask`` is 0 carry ``(h, c)`` through unchanged.
    """
    x, h, c, W, b = (as_tensor(t) for t in (x, h, c, W, b))
    H = h.shape[-1]
    n_in = x.shape[-1]
    if W.shape != (n_in + H, 4 * H) or b.shape != (4 * H,) or c.shape != h.shape:
        raise ValueError(f"lstm shape mismatch: x{x.shape} h{h.shape} c{c.shape} W{W.shape} b{b.shape}")
    xh = np.concatenate([x.data, h.data], axis=-1)
    z = xh @ W.data + b.data
    i = _sigmoid(z[:, :H])
    f = _sigmoid(z[:, H:2 * H])
    cand = np.tanh(z[:, 2 * H:3 * H])
    o = _sigmoid(z[:, 3 * H:])
    c_new = f * c.data + i * cand
    tc = np.tanh(c_new)
    h_new = o * tc
    m = None
    if mask is not None:
        m = np.asarray(mask, dtype=x.dtype)[:, None]
        h_out = m * h_new + (1 - m) * h.data
        c_out = m * c_new + (1 - m) * c.data
    else:
        h_out, c_out = h_new, c_new

    def backward(g):
        gh, gc = g[:, :H], g[:, H:]
        if m is not None:
            gh_pass, gc_pass = gh * (1 - m), gc * (1 - m)
            gh, gc = gh * m, gc * m
        do = gh * tc
        dc = gc + gh * o * (1 - tc * tc)
        dz = np.concatenate([
            dc * cand * i * (1 - i),
            dc * c.data * f * (1 - f),
            dc * i * (1 - cand * cand),
            do * o * (1 - o),
        ], axis=-1)
        dxh = dz @ W.data.T
        dh = dxh[:, n_in:]
        dc_prev = dc * f
        if m is not None:
            dh = dh + gh_pass
            dc_prev = dc_prev + gc_pass
        return dxh[:, :n_in], dh, dc_prev, xh.T @ dz, dz.sum(axis=0)

    return make_node(np.concatenate([h_out, c_out], axis=-1), (x, h, c, W, b), backward)


def lstm_cell(x, h, c, W, b, mask=None) -> tuple[Tensor, Tensor]:
    hc = lstm_step(x, h, c, W, b, mask)
    H = as_tensor(h).shape[-1]
    return hc[:, :H], hc[:, H:]


def lstm_unroll(X: Tensor, lengths, W: Tensor, b: Tensor,
                h0: Optional[Tensor] = None, c0: Optional[Tensor] = None) -> tuple[Tensor, Tensor]:
    """Run an LSTM over ``X[B, T, in]`` and return the state after each row's last step."""
    X = as_tensor(X)
    lengths = np.asarray(lengths)
    if X.shape[1] == 0 or (lengths < 1).any():
        raise ValueError("LSTM over an empty sequence")
    B, T = X.shape[:2]
    H = W.shape[1] // 4
    h = h0 if h0 is not None else Tensor(np.zeros((B, H), dtype=W.dtype))
    c = c0 if c0 is not None else Tensor(np.zeros((B, H), dtype=W.dtype))
    for t in range(T):
        mask = None if (lengths > t).all() else (lengths > t)
        h, c = lstm_cell(X[:, t, :], h, c, W, b, mask)
    return h, c


def bilstm_encode(X: Tensor, lengths, W_f: Tensor, b_f: Tensor, W_b: Tensor, b_b: Tensor):
    """Forward and backward LSTM passes; returns ``(h_f, c_f, h_b, c_b)``."""
    h_f, c_f = lstm_unroll(X, lengths, W_f, b_f)
    h_b, c_b = lstm_unroll(reverse_padded(X, lengths), lengths, W_b, b_b)
    return h_f, c_f, h_b, c_b
