"""Finite-difference helpers shared by the gradient tests."""

import numpy as np

from bwegan import nn


def numeric_grad(fn, arrays, index, h=1e-4):
    """Central differences of scalar ``fn(*arrays)`` w.r.t. ``arrays[index]``."""
    base = [np.array(a, dtype=np.float64) for a in arrays]
    target = base[index]
    grad = np.zeros_like(target)
    it = np.nditer(target, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = target[i]
        target[i] = old + h
        up = fn(*base)
        target[i] = old - h
        down = fn(*base)
        target[i] = old
        grad[i] = (up - down) / (2 * h)
    return grad


def analytic_grads(op, arrays, weights):
    """Gradients of ``sum(op(*tensors) * weights)`` for every input."""
    with nn.default_dtype(np.float64):
        tensors = [nn.parameter(a) for a in arrays]
        out = op(*tensors)
        loss = (out * nn.Tensor(weights)).sum()
        nn.backward(loss)
    return [t.grad for t in tensors]


def max_relative_error(a, b):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8)
    return float(np.max(np.abs(a - b)) / scale)


def check_op(op, arrays, seed=0, h=1e-4):
    """Largest relative error between analytic and central-difference grads."""
    with nn.default_dtype(np.float64), nn.no_grad():
        out_shape = op(*[nn.Tensor(a) for a in arrays]).shape
    weights = np.random.default_rng(seed + 1000).normal(size=out_shape)

    def scalar(*xs):
        with nn.default_dtype(np.float64), nn.no_grad():
            return float(np.sum(op(*[nn.Tensor(x) for x in xs]).data * weights))

    analytic = analytic_grads(op, arrays, weights)
    return max(
        max_relative_error(analytic[i], numeric_grad(scalar, arrays, i, h)) for i in range(len(arrays))
    )


def _signed(rng, shape, low=0.1):
    """Random values bounded away from zero (kinks of abs/leaky_relu)."""
    return rng.uniform(low, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)


# name -> builder(rng) returning (op, input arrays)
OP_CASES = {
    "add_broadcast": lambda r: (lambda a, b: a + b, [r.normal(size=(2, 3, 4)), r.normal(size=(3, 1))]),
    "mul_broadcast": lambda r: (lambda a, b: a * b, [r.normal(size=(2, 3)), r.normal(size=(3,))]),
    "sub_div": lambda r: (lambda a, b: (a - b) / b, [r.normal(size=(5,)), r.uniform(1, 2, size=(5,))]),
    "power": lambda r: (lambda a: nn.power(a, 3.0), [r.normal(size=(4, 3))]),
    "square": lambda r: (nn.square, [r.normal(size=(3, 5))]),
    "sum_axis": lambda r: (lambda a: a.sum(axis=1), [r.normal(size=(3, 4, 2))]),
    "mean_all": lambda r: (lambda a: a.mean(), [r.normal(size=(3, 4))]),
    "abs": lambda r: (nn.tabs, [_signed(r, (4, 5))]),
    "log": lambda r: (nn.log, [r.uniform(0.5, 2.0, size=(6,))]),
    "exp": lambda r: (nn.exp, [r.normal(size=(6,))]),
    "tanh": lambda r: (nn.tanh, [r.normal(size=(3, 4))]),
    "leaky_relu": lambda r: (lambda a: nn.leaky_relu(a, 0.1), [_signed(r, (3, 7))]),
    "clamp_min": lambda r: (lambda a: nn.clamp_min(a, 0.0), [_signed(r, (10,))]),
    "matmul": lambda r: (nn.matmul, [r.normal(size=(2, 3, 4)), r.normal(size=(4, 5))]),
    "reshape_transpose": lambda r: (lambda a: a.reshape(3, 8).transpose(1, 0), [r.normal(size=(2, 3, 4))]),
    "getitem": lambda r: (lambda a: a[:, 1:3], [r.normal(size=(3, 5))]),
    "concatenate": lambda r: (lambda a, b: nn.concatenate([a, b], axis=1), [r.normal(size=(2, 3)), r.normal(size=(2, 2))]),
    "pad_reflect": lambda r: (lambda a: nn.pad_last(a, 3, 2, "reflect"), [r.normal(size=(2, 1, 7))]),
    "pad_constant": lambda r: (lambda a: nn.pad_last(a, 1, 4), [r.normal(size=(2, 3))]),
    "conv1d": lambda r: (
        lambda x, w, b: nn.conv1d(x, w, b, stride=2, dilation=2, padding=3),
        [r.normal(size=(2, 3, 17)), r.normal(size=(4, 3, 3)), r.normal(size=(4,))],
    ),
    "conv1d_plain": lambda r: (
        lambda x, w: nn.conv1d(x, w), [r.normal(size=(1, 2, 9)), r.normal(size=(3, 2, 4))]
    ),
    "conv_transpose1d": lambda r: (
        lambda x, w, b: nn.conv_transpose1d(x, w, b, stride=3, padding=1),
        [r.normal(size=(2, 3, 5)), r.normal(size=(3, 2, 5)), r.normal(size=(2,))],
    ),
    "conv2d": lambda r: (
        lambda x, w, b: nn.conv2d(x, w, b, stride=(2, 1), padding=(2, 0)),
        [r.normal(size=(2, 2, 9, 3)), r.normal(size=(3, 2, 5, 1)), r.normal(size=(3,))],
    ),
    "conv2d_square": lambda r: (
        lambda x, w: nn.conv2d(x, w, stride=(1, 2), padding=(1, 1)),
        [r.normal(size=(1, 2, 5, 6)), r.normal(size=(2, 2, 3, 3))],
    ),
    "avg_pool1d": lambda r: (lambda x: nn.avg_pool1d(x, 4, 2, padding=2), [r.normal(size=(2, 2, 11))]),
}
