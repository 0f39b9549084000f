"""Architecture blocks: dilated convolution stack, self-attention,
cross-modal attention, and the pointwise classifier head.

Every block owns its parameters (Xavier-initialized) and running batch-norm
statistics, and exposes ``parameters()`` / ``buffers()`` for the optimizer
and the weights container.  Forward passes take numpy masks alongside
tensors; masked positions are zeroed before convolutions read them and
re-zeroed after each block.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import (
    BatchNormState,
    Parameter,
    add,
    batch_norm,
    conv1d_dilated,
    dropout,
    elu,
    gather,
    leaky_relu,
    matmul,
    mul,
    reshape,
    sigmoid,
    softmax_masked,
    transpose,
    weighted_sum,
    xavier_init,
)
from ..autodiff.tensor import Tensor

FEATURE_DIM = 256
# (channels, kernel size, dilation) for the three convolution layers
ATROUS_LAYERS = ((64, 3, 1), (128, 3, 2), (256, 3, 4))
LEAKY_SLOPE = 0.2


class AtrousStack:
    """Three dilated conv blocks, each conv -> ELU -> batch norm -> dropout."""

    def __init__(self, in_channels: int, rng: np.random.Generator,
                 prefix: str, dtype=np.float32):
        self.prefix = prefix
        self.dtype = dtype
        self.layers = []
        channels = in_channels
        for i, (features, kernel, dilation) in enumerate(ATROUS_LAYERS):
            name = f"{prefix}.conv{i + 1}"
            layer = {
                "kernel": Parameter(xavier_init((kernel, channels, features), rng, dtype),
                                    f"{name}.kernel"),
                "bias": Parameter(np.zeros(features, dtype=dtype), f"{name}.bias"),
                "gamma": Parameter(np.ones(features, dtype=dtype), f"{name}.gamma"),
                "beta": Parameter(np.zeros(features, dtype=dtype), f"{name}.beta"),
                "state": BatchNormState(features, dtype),
                "dilation": dilation,
            }
            self.layers.append(layer)
            channels = features

    def forward(self, x: Tensor, mask: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None,
                dropout_rate: float = 0.15) -> Tensor:
        m = mask[:, :, None]
        h = x
        for layer in self.layers:
            h = mul(h, m)  # padding must not leak into the conv taps
            h = conv1d_dilated(h, layer["kernel"], layer["dilation"])
            h = add(h, layer["bias"])
            h = elu(h)
            h = batch_norm(h, layer["gamma"], layer["beta"], layer["state"],
                           train=train, mask=mask)
            h = dropout(h, dropout_rate, train, rng)
            h = mul(h, m)
        return h

    def parameters(self) -> list[Parameter]:
        return [layer[k] for layer in self.layers for k in ("kernel", "bias", "gamma", "beta")]

    def weight_parameters(self) -> list[Parameter]:
        return [layer["kernel"] for layer in self.layers]

    def buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            name = f"{self.prefix}.conv{i + 1}"
            out[f"{name}.running_mean"] = layer["state"].running_mean
            out[f"{name}.running_var"] = layer["state"].running_var
        return out

    def load_buffers(self, arrays: dict[str, np.ndarray]) -> None:
        for i, layer in enumerate(self.layers):
            name = f"{self.prefix}.conv{i + 1}"
            layer["state"].running_mean = arrays[f"{name}.running_mean"].astype(self.dtype)
            layer["state"].running_var = arrays[f"{name}.running_var"].astype(self.dtype)


def _split_attention_vector(a_vec: Parameter, dim: int):
    a1 = reshape(a_vec[:dim], (dim, 1))
    a2 = reshape(a_vec[dim:], (dim, 1))
    return a1, a2


class SelfAttention:
    """Pairwise attention over the positions of one sequence.

    Scores come from a shared linear map W and a weight vector applied to
    the concatenated pair features, with a LeakyReLU on the raw score; the
    concatenation is evaluated as two half-projections, which is exactly
    equivalent and avoids materializing pair vectors.
    """

    def __init__(self, rng: np.random.Generator, prefix: str = "self_attn",
                 dim: int = FEATURE_DIM, dtype=np.float32):
        self.dim = dim
        self.W = Parameter(xavier_init((dim, dim), rng, dtype), f"{prefix}.W")
        self.a_vec = Parameter(xavier_init((2 * dim,), rng, dtype, fans=(2 * dim, 1)),
                               f"{prefix}.a")

    def forward(self, h: Tensor, mask: np.ndarray) -> tuple[Tensor, Tensor]:
        """Attended features [B, L, dim] and coefficients [B, L, L]."""
        if not mask.any(axis=1).all():
            raise ValueError("self-attention requires at least one unmasked position per row")
        wh = matmul(h, self.W)
        a1, a2 = _split_attention_vector(self.a_vec, self.dim)
        s1 = matmul(wh, a1)                      # [B, L, 1] query half-score
        s2 = transpose(matmul(wh, a2), (0, 2, 1))  # [B, 1, L] key half-score
        scores = leaky_relu(add(s1, s2), LEAKY_SLOPE)
        alpha = softmax_masked(scores, mask[:, None, :])
        out = elu(matmul(alpha, wh))
        out = mul(out, mask[:, :, None])
        return out, alpha

    def parameters(self) -> list[Parameter]:
        return [self.W, self.a_vec]

    def weight_parameters(self) -> list[Parameter]:
        return [self.W, self.a_vec]


class CrossModalAttention:
    """Antibody residues attend over their antigen neighborhoods.

    Queries go through W1, keys/values through W2.  Keys are gathered per
    neighborhood slot, so score computation is proportional to the total
    neighborhood size rather than the full antigen length;
    ``coefficient_count`` records the number of scored (residue, neighbor)
    pairs in the last forward.
    """

    def __init__(self, rng: np.random.Generator, prefix: str = "cross_attn",
                 dim: int = FEATURE_DIM, dtype=np.float32):
        self.dim = dim
        self.W1 = Parameter(xavier_init((dim, dim), rng, dtype), f"{prefix}.W1")
        self.W2 = Parameter(xavier_init((dim, dim), rng, dtype), f"{prefix}.W2")
        self.a_vec = Parameter(xavier_init((2 * dim,), rng, dtype, fans=(2 * dim, 1)),
                               f"{prefix}.a")
        self.coefficient_count = 0
        self.last_alpha: np.ndarray | None = None
        self.last_nbr_index: np.ndarray | None = None
        self.last_nbr_mask: np.ndarray | None = None

    def forward(self, b: Tensor, g: Tensor, ab_mask: np.ndarray,
                nbr_index: np.ndarray, nbr_mask: np.ndarray) -> tuple[Tensor, Tensor]:
        """Attended antigen features [B, M, dim] and coefficients [B, M, C]."""
        empty = (ab_mask > 0) & (nbr_mask.sum(axis=2) == 0)
        if empty.any():
            raise ValueError("cross-modal attention: unmasked antibody residue "
                             "with an empty neighborhood")
        q = matmul(b, self.W1)
        k = matmul(g, self.W2)
        a1, a2 = _split_attention_vector(self.a_vec, self.dim)
        s1 = matmul(q, a1)                                  # [B, M, 1]
        s2 = reshape(matmul(k, a2), (k.shape[0], k.shape[1]))  # [B, N]
        scores = leaky_relu(add(s1, gather(s2, nbr_index)), LEAKY_SLOPE)

        # Padded antibody rows have no neighbors; give them one synthetic
        # slot so the softmax stays defined, then zero their output.
        soft_mask = np.asarray(nbr_mask, dtype=bool).copy()
        dead_rows = ~soft_mask.any(axis=2)
        soft_mask[dead_rows, 0] = True
        alpha = softmax_masked(scores, soft_mask)
        values = gather(k, nbr_index)                       # [B, M, C, dim]
        out = elu(weighted_sum(alpha, values))
        out = mul(out, ab_mask[:, :, None])

        self.coefficient_count = int(np.asarray(nbr_mask).sum())
        self.last_alpha = alpha.data
        self.last_nbr_index = np.asarray(nbr_index)
        self.last_nbr_mask = np.asarray(nbr_mask)
        return out, alpha

    def parameters(self) -> list[Parameter]:
        return [self.W1, self.W2, self.a_vec]

    def weight_parameters(self) -> list[Parameter]:
        return [self.W1, self.W2, self.a_vec]


class ClassifierHead:
    """Per-position dense map to one logit, then a logistic sigmoid."""

    def __init__(self, rng: np.random.Generator, prefix: str = "head",
                 dim: int = FEATURE_DIM, dtype=np.float32):
        self.w = Parameter(xavier_init((dim, 1), rng, dtype), f"{prefix}.w")
        self.b = Parameter(np.zeros(1, dtype=dtype), f"{prefix}.b")

    def forward(self, h: Tensor, mask: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None,
                dropout_rate: float = 0.5) -> Tensor:
        h = dropout(h, dropout_rate, train, rng)
        logits = add(matmul(h, self.w), self.b)
        probs = sigmoid(logits)
        return mul(probs, mask[:, :, None])  # masked positions report 0

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]

    def weight_parameters(self) -> list[Parameter]:
        return [self.w]
