"""The two model assemblies and their (de)serialization.

Both end in the same classifier head.  The antibody-only model runs the
convolution stack and self-attention over CDR features; the
antibody-antigen model runs independent convolution stacks over both
modalities and replaces self-attention with cross-modal attention.  Each
attention layer sits under an additive skip connection that re-injects its
input, followed by batch normalization.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..autodiff import BatchNormState, Parameter, add, batch_norm, mul
from ..autodiff.serialize import load_arrays, save_arrays
from ..autodiff.tensor import Tensor
from ..data.batching import Batch
from ..errors import WeightsFormatError
from .layers import (
    FEATURE_DIM,
    AtrousStack,
    ClassifierHead,
    CrossModalAttention,
    SelfAttention,
)

ANTIBODY_ONLY = "fast"
ANTIBODY_ANTIGEN = "ag-fast"
MODEL_KINDS = (ANTIBODY_ONLY, ANTIBODY_ANTIGEN)


class _BaseModel:
    kind: str

    def __init__(self, dtype=np.float32, hidden_dropout: float = 0.15,
                 final_dropout: float = 0.5):
        self.dtype = dtype
        self.hidden_dropout = hidden_dropout
        self.final_dropout = final_dropout
        self.attn_gamma = Parameter(np.ones(FEATURE_DIM, dtype=dtype), "attn_norm.gamma")
        self.attn_beta = Parameter(np.zeros(FEATURE_DIM, dtype=dtype), "attn_norm.beta")
        self.attn_state = BatchNormState(FEATURE_DIM, dtype)

    def _components(self) -> list:
        raise NotImplementedError

    def parameters(self) -> "OrderedDict[str, Parameter]":
        params = OrderedDict()
        for comp in self._components():
            for p in comp.parameters():
                params[p.name] = p
        for p in (self.attn_gamma, self.attn_beta):
            params[p.name] = p
        return params

    def weight_parameters(self) -> list[Parameter]:
        """Multiplicative weights only; biases and norm parameters are
        exempt from the L2 penalty."""
        weights = []
        for comp in self._components():
            weights.extend(comp.weight_parameters())
        return weights

    def buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for comp in self._components():
            if hasattr(comp, "buffers"):
                out.update(comp.buffers())
        out["attn_norm.running_mean"] = self.attn_state.running_mean
        out["attn_norm.running_var"] = self.attn_state.running_var
        return out

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def _finish_attention(self, attended: Tensor, skip: Tensor, mask: np.ndarray,
                          train: bool) -> Tensor:
        z = add(attended, skip)  # skip keeps positional information alive
        z = batch_norm(z, self.attn_gamma, self.attn_beta, self.attn_state,
                       train=train, mask=mask)
        return mul(z, mask[:, :, None])

    # -- persistence -------------------------------------------------------
    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {name: p.data for name, p in self.parameters().items()}
        arrays.update(self.buffers())
        return arrays

    def save(self, path) -> None:
        save_arrays(path, self.kind, self.state_arrays())

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = sorted(set(params) - set(arrays))
        if missing:
            raise WeightsFormatError(f"weights container missing arrays: {missing}")
        for name, p in params.items():
            arr = arrays[name].astype(self.dtype)
            if arr.shape != p.data.shape:
                raise WeightsFormatError(
                    f"array {name}: shape {arr.shape} != expected {p.data.shape}")
            p.data = arr
        for comp in self._components():
            if hasattr(comp, "load_buffers"):
                comp.load_buffers(arrays)
        self.attn_state.running_mean = arrays["attn_norm.running_mean"].astype(self.dtype)
        self.attn_state.running_var = arrays["attn_norm.running_var"].astype(self.dtype)


class AntibodyOnlyModel(_BaseModel):
    """Convolution stack + self-attention over CDR residues."""

    kind = ANTIBODY_ONLY

    def __init__(self, rng: np.random.Generator, dtype=np.float32,
                 hidden_dropout: float = 0.15, final_dropout: float = 0.5):
        super().__init__(dtype, hidden_dropout, final_dropout)
        self.ab_stack = AtrousStack(34, rng, "ab_stack", dtype)
        self.attention = SelfAttention(rng, dtype=dtype)
        self.head = ClassifierHead(rng, dtype=dtype)

    def _components(self):
        return [self.ab_stack, self.attention, self.head]

    def forward(self, batch: Batch, train: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        """Per-residue binding probabilities [B, L, 1]; padded rows report 0."""
        mask = batch.ab_mask
        h = self.ab_stack.forward(batch.ab, mask, train, rng, self.hidden_dropout)
        attended, _ = self.attention.forward(h, mask)
        z = self._finish_attention(attended, h, mask, train)
        return self.head.forward(z, mask, train, rng, self.final_dropout)


class AntibodyAntigenModel(_BaseModel):
    """Independent convolution stacks plus cross-modal attention."""

    kind = ANTIBODY_ANTIGEN

    def __init__(self, rng: np.random.Generator, dtype=np.float32,
                 hidden_dropout: float = 0.15, final_dropout: float = 0.5):
        super().__init__(dtype, hidden_dropout, final_dropout)
        self.ab_stack = AtrousStack(34, rng, "ab_stack", dtype)
        self.ag_stack = AtrousStack(28, rng, "ag_stack", dtype)
        self.attention = CrossModalAttention(rng, dtype=dtype)
        self.head = ClassifierHead(rng, dtype=dtype)

    def _components(self):
        return [self.ab_stack, self.ag_stack, self.attention, self.head]

    def forward(self, batch: Batch, train: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        """Per-residue binding probabilities [B, L, 1]; padded rows report 0."""
        if batch.ag is None or batch.nbr_index is None:
            raise ValueError("antibody-antigen model needs antigen tensors and neighborhoods")
        mask = batch.ab_mask
        b = self.ab_stack.forward(batch.ab, mask, train, rng, self.hidden_dropout)
        g = self.ag_stack.forward(batch.ag, batch.ag_mask, train, rng, self.hidden_dropout)
        attended, _ = self.attention.forward(b, g, mask, batch.nbr_index, batch.nbr_mask)
        # The attention output discards antibody features entirely, so the
        # skip from the antibody stack is what keeps them in play.
        z = self._finish_attention(attended, b, mask, train)
        return self.head.forward(z, mask, train, rng, self.final_dropout)


def make_model(kind: str, rng: np.random.Generator, dtype=np.float32,
               hidden_dropout: float = 0.15, final_dropout: float = 0.5):
    if kind == ANTIBODY_ONLY:
        return AntibodyOnlyModel(rng, dtype, hidden_dropout, final_dropout)
    if kind == ANTIBODY_ANTIGEN:
        return AntibodyAntigenModel(rng, dtype, hidden_dropout, final_dropout)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def load_model(path, dtype=np.float32):
    """Rebuild a model from a weights container written by ``save``."""
    kind, arrays = load_arrays(path)
    if kind not in MODEL_KINDS:
        raise WeightsFormatError(f"{path}: unknown model kind {kind!r}")
    model = make_model(kind, np.random.default_rng(0), dtype)
    model.load_state(arrays)
    return model
