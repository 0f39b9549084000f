"""Minimal dense-tensor numerics with reverse-mode differentiation."""

from .tensor import (
    Parameter,
    Tensor,
    add,
    clip,
    concat,
    div,
    exp,
    gather,
    getitem,
    grad_enabled,
    log,
    matmul,
    mul,
    no_grad,
    reshape,
    set_debug_nan,
    sqrt,
    square,
    sub,
    tensor_mean,
    tensor_sum,
    transpose,
    unbroadcast,
    weighted_sum,
)
from .functional import (
    BatchNormState,
    batch_norm,
    conv1d_dilated,
    dropout,
    elu,
    leaky_relu,
    sigmoid,
    softmax_masked,
    xavier_fans,
    xavier_init,
)
from .serialize import load_arrays, save_arrays

__all__ = [
    "Parameter",
    "Tensor",
    "add",
    "batch_norm",
    "BatchNormState",
    "clip",
    "concat",
    "conv1d_dilated",
    "div",
    "dropout",
    "elu",
    "exp",
    "gather",
    "getitem",
    "grad_enabled",
    "leaky_relu",
    "load_arrays",
    "log",
    "matmul",
    "mul",
    "no_grad",
    "reshape",
    "save_arrays",
    "set_debug_nan",
    "sigmoid",
    "softmax_masked",
    "sqrt",
    "square",
    "sub",
    "tensor_mean",
    "tensor_sum",
    "transpose",
    "unbroadcast",
    "weighted_sum",
    "xavier_fans",
    "xavier_init",
]
