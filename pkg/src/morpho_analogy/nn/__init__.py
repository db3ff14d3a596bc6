"""Minimal numpy autodiff: the layers, losses and optimizers the analogy models need."""

from . import functional, losses
from .gradcheck import GradCheckReport, grad_check
from .module import Module, uniform_fan_in
from .optim import Optimizer, OptimizerState, clip_grad_norm
from .tensor import Parameter, Tensor, no_grad

__all__ = [
    "GradCheckReport", "Module", "Optimizer", "OptimizerState", "Parameter", "Tensor",
    "clip_grad_norm", "functional", "grad_check", "losses", "no_grad", "uniform_fan_in",
]
