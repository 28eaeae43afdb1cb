"""Minimal numpy tensor library with reverse-mode differentiation."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .layers import Conv1d, Conv2d, ConvTranspose1d, Module, same_padding
from .optim import AdamW, LrSchedule, OptimizerState, adamw_step, lr_at
from .tensor import (
    Tensor,
    as_tensor,
    avg_pool1d,
    backward,
    clamp_min,
    concatenate,
    conv1d,
    conv2d,
    conv_transpose1d,
    default_dtype,
    exp,
    get_default_dtype,
    leaky_relu,
    log,
    matmul,
    mean,
    no_grad,
    pad_last,
    parameter,
    power,
    reshape,
    set_default_dtype,
    square,
    tabs,
    tanh,
    transpose,
    tsum,
)

__all__ = [
    "AdamW",
    "CheckpointError",
    "Conv1d",
    "Conv2d",
    "ConvTranspose1d",
    "LrSchedule",
    "Module",
    "OptimizerState",
    "Tensor",
    "adamw_step",
    "as_tensor",
    "avg_pool1d",
    "backward",
    "clamp_min",
    "concatenate",
    "conv1d",
    "conv2d",
    "conv_transpose1d",
    "default_dtype",
    "exp",
    "get_default_dtype",
    "leaky_relu",
    "load_checkpoint",
    "log",
    "lr_at",
    "matmul",
    "mean",
    "no_grad",
    "pad_last",
    "parameter",
    "power",
    "reshape",
    "same_padding",
    "save_checkpoint",
    "set_default_dtype",
    "square",
    "tabs",
    "tanh",
    "transpose",
    "tsum",
]
