"""AdamW with decoupled weight decay, and the exponential per-epoch LR decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

__all__ = ["OptimizerState", "AdamW", "adamw_step", "LrSchedule", "lr_at"]


@dataclass
class OptimizerState:
    beta1: float = 0.8
    beta2: float = 0.999
    weight_decay: float = 0.01
    eps: float = 1e-8
    step: int = 0
    exp_avg: dict = field(default_factory=dict)
    exp_avg_sq: dict = field(default_factory=dict)

    def to_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        arrays = {}
        for name, value in self.exp_avg.items():
            arrays[f"{prefix}.exp_avg.{name}"] = value
        for name, value in self.exp_avg_sq.items():
            arrays[f"{prefix}.exp_avg_sq.{name}"] = value
        return arrays

    def hyperparameters(self) -> dict:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "weight_decay": self.weight_decay,
            "eps": self.eps,
            "step": self.step,
        }

    @classmethod
    def from_arrays(cls, arrays: dict, prefix: str, hyper: dict) -> "OptimizerState":
        state = cls(**hyper)
        for key, value in arrays.items():
            for slot, target in (("exp_avg.", state.exp_avg), ("exp_avg_sq.", state.exp_avg_sq)):
                head = f"{prefix}.{slot}"
                if key.startswith(head):
                    target[key[len(head) :]] = np.array(value)
        return state


def adamw_step(params: dict, grads: dict, state: OptimizerState, lr: float) -> None:
    """One in-place AdamW update of ``params`` (name -> ndarray).

    Weight decay is applied to the parameter directly (``p *= 1 - lr*wd``)
    before the bias-corrected Adam step.
    """
    if set(params) != set(grads):
        raise ValueError("params and grads must have the same names")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"{name}: grad shape {g.shape} != parameter shape {p.shape}")
        m = state.exp_avg.get(name)
        v = state.exp_avg_sq.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.exp_avg[name] = m
        state.exp_avg_sq[name] = v
        p *= 1.0 - lr * state.weight_decay
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


class AdamW:
    """Optimizer bound to a dict of named parameter tensors."""

    def __init__(self, params: dict[str, Tensor], beta1=0.8, beta2=0.999, weight_decay=0.01, eps=1e-8):
        self.params = params
        self.state = OptimizerState(beta1, beta2, weight_decay, eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self, lr: float) -> None:
        grads = {}
        for name, p in self.params.items():
            grads[name] = np.zeros_like(p.data) if p.grad is None else p.grad.astype(p.data.dtype)
        adamw_step({n: p.data for n, p in self.params.items()}, grads, self.state, lr)


@dataclass(frozen=True)
class LrSchedule:
    lr_init: float = 1.5e-4
    gamma: float = 0.999

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.lr_init <= 0:
            raise ValueError("lr_init must be positive")

    def lr_at(self, epoch: int) -> float:
        return lr_at(self, epoch)


def lr_at(sched: LrSchedule, epoch: int) -> float:
    """``gamma ** epoch * lr_init``."""
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")
    return sched.gamma**epoch * sched.lr_init
