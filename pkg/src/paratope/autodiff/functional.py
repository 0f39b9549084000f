"""Differentiable building blocks: activations, masked softmax, dilated
convolution, batch normalization, dropout, and Xavier initialization.

Convolution and the activations carry hand-written VJPs; batch
normalization is composed from arithmetic primitives so its gradient
falls out of the chain rule.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .tensor import (
    Tensor,
    _from_op,
    add,
    clip,
    div,
    mul,
    sqrt,
    square,
    sub,
    tensor_sum,
)


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def elu(x: Tensor) -> Tensor:
    neg = np.exp(np.minimum(x.data, 0.0)) - 1.0
    data = np.where(x.data > 0.0, x.data, neg)
    local = np.where(x.data > 0.0, 1.0, neg + 1.0).astype(x.dtype)
    return _from_op(data, [(x, lambda g: g * local)])


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    data = np.where(x.data >= 0.0, x.data, slope * x.data)
    local = np.where(x.data >= 0.0, 1.0, slope).astype(x.dtype)
    return _from_op(data, [(x, lambda g: g * local)])


def sigmoid(x: Tensor) -> Tensor:
    data = expit(x.data).astype(x.dtype)
    return _from_op(data, [(x, lambda g: g * data * (1.0 - data))])


# ---------------------------------------------------------------------------
# masked softmax
# ---------------------------------------------------------------------------

def softmax_masked(logits: Tensor, mask: np.ndarray, axis: int = -1) -> Tensor:
    """Softmax over ``axis`` restricted to positions where ``mask`` is 1.

    Masked entries come out exactly 0; unmasked entries are positive and
    sum to 1 along ``axis``.  Max-subtraction keeps the exponentials in
    range.  Rows with no unmasked entry are rejected.
    """
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), logits.shape)
    if not mask.any(axis=axis).all():
        raise ValueError("softmax_masked: at least one row is fully masked")
    neg_inf = np.where(mask, logits.data, -np.inf)
    shifted = neg_inf - neg_inf.max(axis=axis, keepdims=True)
    expv = np.where(mask, np.exp(shifted), 0.0)
    data = (expv / expv.sum(axis=axis, keepdims=True)).astype(logits.dtype)

    def vjp(g):
        # Masked outputs are 0, so they drop out of the Jacobian product.
        inner = (g * data).sum(axis=axis, keepdims=True)
        return data * (g - inner)

    return _from_op(data, [(logits, vjp)])


# ---------------------------------------------------------------------------
# dilated convolution
# ---------------------------------------------------------------------------

def conv1d_dilated(x: Tensor, kernel: Tensor, dilation: int = 1) -> Tensor:
    """1-D convolution with dilation and same-size zero padding.

    ``x`` is [B, L, C_in], ``kernel`` is [K, C_in, C_out] with odd K.
    Output position t sums x[t + (k - (K-1)/2) * dilation] @ kernel[k]
    over taps k, reading zeros outside the sequence.  Differentiable in
    both x and kernel; each tap is a shifted matrix product.
    """
    if kernel.ndim != 3:
        raise ValueError(f"kernel must be [K, C_in, C_out], got {kernel.shape}")
    K, c_in, _ = kernel.shape
    if K % 2 == 0:
        raise ValueError(f"kernel size must be odd, got {K}")
    if dilation < 1:
        raise ValueError(f"dilation must be >= 1, got {dilation}")
    if x.ndim != 3 or x.shape[-1] != c_in:
        raise ValueError(f"conv input {x.shape} incompatible with kernel {kernel.shape}")

    B, L, _ = x.shape
    c_out = kernel.shape[-1]
    offsets = [(k - (K - 1) // 2) * dilation for k in range(K)]
    data = np.zeros((B, L, c_out), dtype=x.dtype)
    spans = []
    for k, off in enumerate(offsets):
        t0, t1 = max(0, -off), min(L, L - off)
        spans.append((t0, t1, off))
        if t1 > t0:
            data[:, t0:t1] += np.matmul(x.data[:, t0 + off:t1 + off], kernel.data[k])

    def vjp_x(g):
        gx = np.zeros_like(x.data)
        for k, (t0, t1, off) in enumerate(spans):
            if t1 > t0:
                gx[:, t0 + off:t1 + off] += np.matmul(g[:, t0:t1], kernel.data[k].T)
        return gx

    def vjp_kernel(g):
        gk = np.zeros_like(kernel.data)
        for k, (t0, t1, off) in enumerate(spans):
            if t1 > t0:
                xs = x.data[:, t0 + off:t1 + off].reshape(-1, c_in)
                gs = g[:, t0:t1].reshape(-1, c_out)
                gk[k] = xs.T @ gs
        return gk

    return _from_op(data, [(x, vjp_x), (kernel, vjp_kernel)])


# ---------------------------------------------------------------------------
# batch normalization
# ---------------------------------------------------------------------------

class BatchNormState:
    """Per-channel running statistics for inference mode."""

    def __init__(self, channels: int, dtype=np.float32):
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: BatchNormState,
    train: bool,
    mask: np.ndarray | None = None,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Normalize [B, L, C] per channel over batch and sequence positions.

    In train mode, statistics run over unmasked positions only (padding
    would otherwise leak into them) and the running stats are updated with
    ``momentum``.  Inference normalizes with the stored running stats.
    Train mode requires batch size >= 2.
    """
    if train:
        if x.shape[0] < 2:
            raise ValueError(f"batch_norm in train mode needs batch size >= 2, got {x.shape[0]}")
        if mask is None:
            mask = np.ones(x.shape[:2], dtype=x.dtype)
        m = np.asarray(mask, dtype=x.dtype)[:, :, None]
        count = float(m.sum())
        masked = mul(x, m)
        mean = mul(tensor_sum(masked, axis=(0, 1)), 1.0 / count)
        centered = mul(sub(x, mean.reshape((1, 1, -1))), m)
        var = mul(tensor_sum(square(centered), axis=(0, 1)), 1.0 / count)
        state.running_mean = ((1.0 - momentum) * state.running_mean
                              + momentum * mean.data.astype(state.running_mean.dtype))
        state.running_var = ((1.0 - momentum) * state.running_var
                             + momentum * var.data.astype(state.running_var.dtype))
        inv = div(centered, sqrt(add(var, eps)).reshape((1, 1, -1)))
        return add(mul(inv, gamma.reshape((1, 1, -1))), beta.reshape((1, 1, -1)))
    scale = (1.0 / np.sqrt(state.running_var + eps)).astype(x.dtype)
    shift = (-state.running_mean * scale).astype(x.dtype)
    normalized = add(mul(x, scale.reshape(1, 1, -1)), shift.reshape(1, 1, -1))
    return add(mul(normalized, gamma.reshape((1, 1, -1))), beta.reshape((1, 1, -1)))


# ---------------------------------------------------------------------------
# dropout
# ---------------------------------------------------------------------------

def dropout(x: Tensor, p: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p).

    Identity at p=0 or in inference mode.  Deterministic given the rng.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in train mode needs an rng")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / np.asarray(1.0 - p, dtype=x.dtype)
    return mul(x, keep)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def xavier_fans(shape: tuple[int, ...]) -> tuple[int, int]:
    """(fan_in, fan_out) for dense [in, out] and conv [K, C_in, C_out] shapes."""
    if len(shape) == 2:
        return shape[0], shape[1]
    if len(shape) == 3:
        k, c_in, c_out = shape
        return k * c_in, k * c_out
    raise ValueError(f"cannot infer fans for shape {shape}; pass fans explicitly")


def xavier_init(shape, rng: np.random.Generator, dtype=np.float32,
                fans: tuple[int, int] | None = None) -> np.ndarray:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    shape = tuple(int(s) for s in shape)
    fan_in, fan_out = fans if fans is not None else xavier_fans(shape)
    bound = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)
