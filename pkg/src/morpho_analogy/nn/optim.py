"""Adam and NAdam with bias correction, plus global-norm gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .tensor import Parameter


@dataclass
class OptimizerState:
    kind: Literal["adam", "nadam"] = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


class Optimizer:
    """Adam / NAdam over a fixed list of parameters.

    NAdam uses Dozat's Nesterov-style momentum estimate without the momentum
    schedule: ``m_hat = beta1 * m_t / (1 - beta1^(t+1)) + (1 - beta1) * g / (1 - beta1^t)``.
    """

    def __init__(self, params: Iterable[Parameter], kind: str = "adam", learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        if kind not in ("adam", "nadam"):
            raise ValueError(f"unknown optimizer {kind!r}")
        self.params = [p for p in params if p.trainable]
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.state = OptimizerState(kind, learning_rate, beta1, beta2, epsilon)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        st = self.state
        st.step_count += 1
        t = st.step_count
        b1, b2 = st.beta1, st.beta2
        for p in self.params:
            g = p.grad
            if g is None:
                continue
            m = st.first_moment.get(p.name)
            if m is None:
                m = st.first_moment[p.name] = np.zeros_like(p.data)
                st.second_moment[p.name] = np.zeros_like(p.data)
            v = st.second_moment[p.name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            v_hat = v / (1 - b2 ** t)
            if st.kind == "adam":
                m_hat = m / (1 - b1 ** t)
            else:
                m_hat = b1 * m / (1 - b1 ** (t + 1)) + (1 - b1) * g / (1 - b1 ** t)
            p.data -= (st.learning_rate * m_hat / (np.sqrt(v_hat) + st.epsilon)).astype(p.dtype)
        self.zero_grad()


def clip_grad_norm(params: Iterable[Parameter], max_norm: float) -> float:
    """Rescale gradients in place so their global L2 norm is at most ``max_norm``."""
    params = [p for p in params if p.grad is not None]
    total = float(np.sqrt(sum(float((p.grad.astype(np.float64) ** 2).sum()) for p in params)))
    if total > max_norm:
        scale = max_norm / (total + 1e-12)
        for p in params:
            p.grad *= scale
    return total
