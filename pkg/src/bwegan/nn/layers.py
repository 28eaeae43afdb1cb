"""Parameter containers and the convolution layers the models are built from."""

from __future__ import annotations

from contextlib import contextmanager
from typing import Iterator

import numpy as np

from . import tensor as T
from .tensor import Tensor

INIT_STD = 0.01


class Module:
    """Holds parameters and child modules as attributes.

    Parameters are named by attribute path (``ups.0.weight``), in attribute
    insertion order, so names and ordering are stable across runs.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            yield from _walk(value, f"{prefix}{name}")

    def parameters(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = set(params) - set(state)
        extra = set(state) - set(params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(extra)}")
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise ValueError(f"{name}: shape {value.shape} != {p.shape}")
            p.data = value.astype(p.data.dtype, copy=True)

    @contextmanager
    def frozen(self):
        """Within the block, parameters take no gradient (inputs still do).

        Run ``backward`` inside the block too: the flags are read when
        gradients are propagated, not when the graph is built.
        """
        params = list(self.parameters().values())
        for p in params:
            p.requires_grad = False
        try:
            yield self
        finally:
            for p in params:
                p.requires_grad = True

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def _walk(value, name):
    if isinstance(value, Tensor):
        if value.requires_grad:
            yield name, value
    elif isinstance(value, Module):
        yield from value.named_parameters(name + ".")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk(item, f"{name}.{i}")


def _normal(rng: np.random.Generator, shape, std=INIT_STD) -> Tensor:
    return T.parameter(rng.normal(0.0, std, size=shape).astype(T.get_default_dtype()))


def _zeros(shape) -> Tensor:
    return T.parameter(np.zeros(shape, dtype=T.get_default_dtype()))


class Conv1d(Module):
    def __init__(self, c_in, c_out, kernel_size, rng, stride=1, dilation=1, padding=0):
        self.weight = _normal(rng, (c_out, c_in, kernel_size))
        self.bias = _zeros((c_out,))
        self.stride = stride
        self.dilation = dilation
        self.padding = padding

    def forward(self, x):
        return T.conv1d(x, self.weight, self.bias, self.stride, self.dilation, self.padding)


class ConvTranspose1d(Module):
    def __init__(self, c_in, c_out, kernel_size, rng, stride=1, padding=0):
        self.weight = _normal(rng, (c_in, c_out, kernel_size))
        self.bias = _zeros((c_out,))
        self.stride = stride
        self.padding = padding

    def forward(self, x):
        return T.conv_transpose1d(x, self.weight, self.bias, self.stride, self.padding)


class Conv2d(Module):
    def __init__(self, c_in, c_out, kernel_size, rng, stride=(1, 1), padding=(0, 0)):
        kh, kw = kernel_size
        self.weight = _normal(rng, (c_out, c_in, kh, kw))
        self.bias = _zeros((c_out,))
        self.stride = stride
        self.padding = padding

    def forward(self, x):
        return T.conv2d(x, self.weight, self.bias, self.stride, self.padding)


def same_padding(kernel_size: int, dilation: int = 1) -> int:
    return dilation * (kernel_size - 1) // 2
