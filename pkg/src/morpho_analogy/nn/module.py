from __future__ import annotations

from typing import Iterator

import numpy as np

from .tensor import Parameter


def uniform_fan_in(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, dtype=np.float32) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    """Holds named parameters; subclasses register them with :meth:`add_param`."""

    prefix = ""

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._params: dict[str, Parameter] = {}

    def add_param(self, name: str, value: np.ndarray) -> Parameter:
        full = f"{self.prefix}.{name}" if self.prefix else name
        if full in self._params:
            raise ValueError(f"duplicate parameter {full}")
        p = Parameter(np.asarray(value, dtype=self.dtype), full)
        self._params[full] = p
        return p

    def parameters(self) -> list[Parameter]:
        return list(self._params.values())

    def named_parameters(self) -> Iterator[tuple[str, Parameter]]:
        return iter(self._params.items())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for k, p in self._params.items():
            if state[k].shape != p.shape:
                raise ValueError(f"{k}: shape {state[k].shape} != {p.shape}")
            p.data = np.array(state[k], dtype=self.dtype)
            p.zero_grad()

    def astype(self, dtype) -> "Module":
        self.dtype = np.dtype(dtype)
        for p in self._params.values():
            p.data = p.data.astype(self.dtype)
            p.zero_grad()
        return self

    def set_trainable(self, flag: bool) -> None:
        for p in self._params.values():
            p.trainable = flag

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()
