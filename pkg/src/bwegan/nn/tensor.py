"""A small reverse-mode automatic differentiation engine on top of numpy.

Every operation returns a new :class:`Tensor` that remembers its parents and
a closure mapping the output gradient to parent gradients. :func:`backward`
walks the graph in reverse topological order. Leaf tensors created with
``requires_grad=True`` accumulate into ``.grad``; call :meth:`Tensor.zero_grad`
(or an optimizer's ``zero_grad``) before each backward pass.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np

_window = np.lib.stride_tricks.sliding_window_view

_DEFAULT_DTYPE = np.float64
_GRAD_ENABLED = True


def set_default_dtype(dtype) -> None:
    """Set the floating dtype used for new tensors (float32 or float64)."""
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"unsupported dtype {dtype}")
    _DEFAULT_DTYPE = dtype


def get_default_dtype():
    return _DEFAULT_DTYPE


@contextlib.contextmanager
def default_dtype(dtype):
    previous = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=dtype or _DEFAULT_DTYPE)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._backward: Callable | None = None

    # -- construction helpers -------------------------------------------
    @classmethod
    def _make(cls, data, parents: Sequence["Tensor"], backward_fn):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        needs = _GRAD_ENABLED and any(p.requires_grad for p in parents)
        out.requires_grad = needs
        out._parents = tuple(parents) if needs else ()
        out._backward = backward_fn if needs else None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return not self._parents

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __len__(self):
        return self.data.shape[0]

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other, self.data.dtype)))

    def __rsub__(self, other):
        return add(as_tensor(other, self.data.dtype), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return mul(self, power(other, -1.0))
        return mul(self, 1.0 / other)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    def abs(self):
        return tabs(self)

    def log(self):
        return log(self)

    def tanh(self):
        return tanh(self)


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


# -- backward engine ------------------------------------------------------
def _topological_order(root: Tensor):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable ``requires_grad`` leaf."""
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss does not depend on any tensor that requires grad")
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg


# -- elementwise and reductions ------------------------------------------
def add(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b, a.data.dtype)

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._make(a.data + b.data, (a, b), bw)


def neg(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return Tensor._make(-a.data, (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b, a.data.dtype)

    def bw(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._make(a.data * b.data, (a, b), bw)


def power(a: Tensor, exponent: float) -> Tensor:
    a = as_tensor(a)
    exponent = float(exponent)

    def bw(g):
        return (g * exponent * a.data ** (exponent - 1.0),)

    return Tensor._make(a.data**exponent, (a,), bw)


def square(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return Tensor._make(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,))


def tsum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._make(np.asarray(out), (a,), bw)


def mean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    count = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(tsum(a, axis, keepdims), 1.0 / count)


def tabs(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return Tensor._make(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def log(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return Tensor._make(np.log(a.data), (a,), lambda g: (g / a.data,))


def exp(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return Tensor._make(out, (a,), lambda g: (g * out,))


def tanh(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return Tensor._make(out, (a,), lambda g: (g * (1.0 - out * out),))


def leaky_relu(a: Tensor, slope: float = 0.1) -> Tensor:
    a = as_tensor(a)
    if not 0.0 <= slope <= 1.0:
        raise ValueError("slope must be in [0, 1]")
    mask = a.data > 0
    out = np.maximum(a.data, a.data * slope)
    return Tensor._make(out, (a,), lambda g: (np.where(mask, g, slope * g),))


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """``max(a, floor)``; the gradient is zero where the floor is active."""
    a = as_tensor(a)
    mask = a.data > floor
    out = np.where(mask, a.data, floor).astype(a.data.dtype)
    return Tensor._make(out, (a,), lambda g: (np.where(mask, g, 0.0),))


def matmul(a, b) -> Tensor:
    """``a @ b`` for ``a`` of shape (..., n, k) and a 2-D ``b`` (k, m)."""
    a = as_tensor(a)
    b = as_tensor(b, a.data.dtype)
    if b.ndim != 2:
        raise ValueError("matmul supports a 2-D right operand only")
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch {a.shape} @ {b.shape}")

    def bw(g):
        ga = g @ b.data.T if a.requires_grad else None
        gb = None
        if b.requires_grad:
            lead = list(range(a.ndim - 1))
            gb = np.tensordot(a.data, g, axes=(lead, lead))
        return ga, gb

    return Tensor._make(a.data @ b.data, (a, b), bw)


# -- shape manipulation -----------------------------------------------------
def reshape(a: Tensor, shape) -> Tensor:
    a = as_tensor(a)
    return Tensor._make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes=None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return Tensor._make(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def getitem(a: Tensor, index) -> Tensor:
    a = as_tensor(a)
    def bw(g):
        full = np.zeros_like(a.data)
        if _is_advanced(index):
            np.add.at(full, index, g)
        else:
            full[index] = g
        return (full,)

    return Tensor._make(a.data[index], (a,), bw)


def _is_advanced(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return any(isinstance(i, (list, np.ndarray, Tensor)) for i in items)


def concatenate(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def bw(g):
        return tuple(np.split(g, sizes, axis=axis))

    return Tensor._make(np.concatenate([t.data for t in tensors], axis=axis), tensors, bw)


def pad_last(a: Tensor, left: int, right: int, mode: str = "constant") -> Tensor:
    """Pad the last axis with zeros or with a mirror reflection."""
    n = a.shape[-1]
    widths = [(0, 0)] * (a.ndim - 1) + [(left, right)]
    if mode == "reflect":
        if left >= n or right >= n:
            raise ValueError(f"reflect padding ({left}, {right}) needs more than {n} samples")
        out = np.pad(a.data, widths, mode="reflect")

        def bw(g):
            dx = g[..., left : left + n].copy()
            if left:
                dx[..., 1 : left + 1] += g[..., :left][..., ::-1]
            if right:
                dx[..., n - 1 - right : n - 1] += g[..., left + n :][..., ::-1]
            return (dx,)

    elif mode == "constant":
        out = np.pad(a.data, widths)

        def bw(g):
            return (g[..., left : left + n],)

    else:
        raise ValueError(f"unknown pad mode {mode!r}")
    return Tensor._make(out, (a,), bw)


# -- convolutions -----------------------------------------------------------
# Column blocks are laid out (B, C * k, T_out) with the tap index inside the
# channel index, so a conv is one batched matmul and the adjoint scatter reads
# contiguous (B, C, T_out) slabs.
_WINDOW_VIEW_MIN_TAPS = 64


def _im2col_1d(xp, k, stride, dilation, t_out):
    b, c, _ = xp.shape
    last = stride * (t_out - 1) + 1
    if k >= _WINDOW_VIEW_MIN_TAPS:
        span = dilation * (k - 1) + 1
        win = _window(xp, span, axis=2)[:, :, ::stride, ::dilation][:, :, :t_out]
        cols = np.ascontiguousarray(win.transpose(0, 1, 3, 2))
    else:
        cols = np.empty((b, c, k, t_out), dtype=xp.dtype)
        for j in range(k):
            start = j * dilation
            cols[:, :, j] = xp[:, :, start : start + last : stride]
    return cols.reshape(b, c * k, t_out)


def _col2im_1d(cols, channels, k, length, stride, dilation):
    b, _, t_out = cols.shape
    cols = cols.reshape(b, channels, k, t_out)
    out = np.zeros((b, channels, length), dtype=cols.dtype)
    last = stride * (t_out - 1) + 1
    for j in range(k):
        start = j * dilation
        out[:, :, start : start + last : stride] += cols[:, :, j]
    return out


def _weight_grad(g, cols):
    """sum_b g[b] @ cols[b].T for g (B, M, T) and cols (B, N, T)."""
    return np.matmul(g, cols.transpose(0, 2, 1)).sum(axis=0)


def conv1d(x, weight, bias=None, stride: int = 1, dilation: int = 1, padding: int = 0) -> Tensor:
    """1-D cross-correlation. ``x``: (B, C_in, T); ``weight``: (C_out, C_in, k)."""
    x = as_tensor(x)
    weight = as_tensor(weight, x.data.dtype)
    if x.ndim != 3 or weight.ndim != 3 or x.shape[1] != weight.shape[1]:
        raise ValueError(f"conv1d shape mismatch: input {x.shape}, weight {weight.shape}")
    if stride < 1 or dilation < 1 or padding < 0:
        raise ValueError("stride and dilation must be >= 1, padding >= 0")
    c_out, c_in, k = weight.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    span = dilation * (k - 1) + 1
    if xp.shape[2] < span:
        raise ValueError(f"input of length {x.shape[2]} too short for kernel span {span}")
    t_out = (xp.shape[2] - span) // stride + 1
    cols = _im2col_1d(xp, k, stride, dilation, t_out)
    w2 = weight.data.reshape(c_out, c_in * k)
    out = np.matmul(w2, cols)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias, x.data.dtype)
        out += bias.data[None, :, None]
        parents.append(bias)

    def bw(g):
        gx = gw = gb = None
        if x.requires_grad:
            gxp = _col2im_1d(np.matmul(w2.T, g), c_in, k, xp.shape[2], stride, dilation)
            gx = gxp[:, :, padding : padding + x.shape[2]]
        if weight.requires_grad:
            gw = _weight_grad(g, cols).reshape(weight.shape)
        if bias is not None and bias.requires_grad:
            gb = g.sum(axis=(0, 2))
        return (gx, gw, gb)[: len(parents)]

    return Tensor._make(out, parents, bw)


def conv_transpose1d(x, weight, bias=None, stride: int = 1, padding: int = 0) -> Tensor:
    """Transposed 1-D convolution (the adjoint of :func:`conv1d`).

    ``x``: (B, C_in, T); ``weight``: (C_in, C_out, k). Output length is
    ``(T - 1) * stride - 2 * padding + k``.
    """
    x = as_tensor(x)
    weight = as_tensor(weight, x.data.dtype)
    if x.ndim != 3 or weight.ndim != 3 or x.shape[1] != weight.shape[0]:
        raise ValueError(f"conv_transpose1d shape mismatch: input {x.shape}, weight {weight.shape}")
    c_in, c_out, k = weight.shape
    t_in = x.shape[2]
    full = (t_in - 1) * stride + k
    if full - 2 * padding < 1:
        raise ValueError("padding too large for output length")
    w2 = weight.data.reshape(c_in, c_out * k)
    out = _col2im_1d(np.matmul(w2.T, x.data), c_out, k, full, stride, 1)
    out = np.ascontiguousarray(out[:, :, padding : full - padding])
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias, x.data.dtype)
        out += bias.data[None, :, None]
        parents.append(bias)

    def bw(g):
        gfull = np.pad(g, ((0, 0), (0, 0), (padding, padding))) if padding else g
        gcols = _im2col_1d(gfull, k, stride, 1, t_in)
        gx = gw = gb = None
        if x.requires_grad:
            gx = np.matmul(w2, gcols)
        if weight.requires_grad:
            gw = _weight_grad(x.data, gcols).reshape(weight.shape)
        if bias is not None and bias.requires_grad:
            gb = g.sum(axis=(0, 2))
        return (gx, gw, gb)[: len(parents)]

    return Tensor._make(out, parents, bw)


def conv2d(x, weight, bias=None, stride=(1, 1), padding=(0, 0)) -> Tensor:
    """2-D cross-correlation. ``x``: (B, C_in, H, W); ``weight``: (C_out, C_in, kh, kw)."""
    x = as_tensor(x)
    weight = as_tensor(weight, x.data.dtype)
    if x.ndim != 4 or weight.ndim != 4 or x.shape[1] != weight.shape[1]:
        raise ValueError(f"conv2d shape mismatch: input {x.shape}, weight {weight.shape}")
    sh, sw = (stride, stride) if np.isscalar(stride) else stride
    ph, pw = (padding, padding) if np.isscalar(padding) else padding
    c_out, c_in, kh, kw = weight.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if ph or pw else x.data
    b, _, hp, wp = xp.shape
    if hp < kh or wp < kw:
        raise ValueError(f"input {x.shape} too small for kernel {(kh, kw)}")
    ho = (hp - kh) // sh + 1
    wo = (wp - kw) // sw + 1
    lh, lw = sh * (ho - 1) + 1, sw * (wo - 1) + 1
    cols = np.empty((b, c_in, kh, kw, ho, wo), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i : i + lh : sh, j : j + lw : sw]
    cols = cols.reshape(b, c_in * kh * kw, ho * wo)
    w2 = weight.data.reshape(c_out, -1)
    out = np.matmul(w2, cols).reshape(b, c_out, ho, wo)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias, x.data.dtype)
        out += bias.data[None, :, None, None]
        parents.append(bias)

    def bw(g):
        g2 = g.reshape(b, c_out, ho * wo)
        gx = gw = gb = None
        if x.requires_grad:
            dcols = np.matmul(w2.T, g2).reshape(b, c_in, kh, kw, ho, wo)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i : i + lh : sh, j : j + lw : sw] += dcols[:, :, i, j]
            gx = gxp[:, :, ph : ph + x.shape[2], pw : pw + x.shape[3]]
        if weight.requires_grad:
            gw = _weight_grad(g2, cols).reshape(weight.shape)
        if bias is not None and bias.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        return (gx, gw, gb)[: len(parents)]

    return Tensor._make(out, parents, bw)


def avg_pool1d(x: Tensor, kernel_size: int, stride: int | None = None, padding: int = 0) -> Tensor:
    """Average pooling over the last axis; zero padding counts toward the mean."""
    stride = kernel_size if stride is None else stride
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    if xp.shape[2] < kernel_size:
        raise ValueError("input too short for pooling window")
    out = _window(xp, kernel_size, axis=2)[:, :, ::stride].mean(axis=-1)
    channels = x.shape[1]

    def bw(g):
        cols = np.repeat((g / kernel_size)[:, :, None, :], kernel_size, axis=2)
        cols = cols.reshape(g.shape[0], channels * kernel_size, g.shape[2])
        gxp = _col2im_1d(cols, channels, kernel_size, xp.shape[2], stride, 1)
        return (gxp[:, :, padding : padding + x.shape[2]],)

    return Tensor._make(np.ascontiguousarray(out), (x,), bw)
