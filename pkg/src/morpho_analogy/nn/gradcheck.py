"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import Parameter, Tensor, no_grad


@dataclass
class GradCheckReport:
    errors: dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-4

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.errors.items() if not v < self.tolerance}

    @property
    def ok(self) -> bool:
        return not self.failures


def grad_check(closure: Callable[[], Tensor], params: Sequence[Parameter],
               tolerance: float = 1e-4, h: float = 1e-5) -> GradCheckReport:
    """Compare backprop gradients of ``closure()`` with central differences.

    The error for a parameter is ``max|analytic - numeric|`` divided by the
    largest gradient magnitude of that parameter (either estimate), so entries
    that are legitimately near zero do not dominate. Parameters must be
    float64.
    """
    for p in params:
        if p.dtype != np.float64:
            raise TypeError(f"grad_check needs float64 parameters; {p.name} is {p.dtype}")
        p.zero_grad()
    loss = closure()
    loss.backward()
    analytic = {p.name: p.grad.copy() for p in params}

    report = GradCheckReport(tolerance=tolerance)
    with no_grad():
        for p in params:
            numeric = np.zeros_like(p.data)
            flat = p.data.reshape(-1)
            num_flat = numeric.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = float(closure().data)
                flat[i] = orig - h
                down = float(closure().data)
                flat[i] = orig
                num_flat[i] = (up - down) / (2 * h)
            a = analytic[p.name]
            scale = max(np.abs(a).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-12)
            report.errors[p.name] = float(np.abs(a - numeric).max(initial=0.0) / scale)
    for p in params:
        p.zero_grad()
    return report
