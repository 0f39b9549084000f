"""Loss, L2 penalty, Adam, and the training loop.

Training minimizes masked binary cross-entropy plus an L2 penalty on
multiplicative weights, with bias-corrected Adam.  Everything is seeded:
initialization, shuffling, and dropout all derive from one seed, so a
fixed (seed, config, data) triple reproduces parameters bit for bit.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Parameter, add, clip, log, mul, no_grad, square, sub, tensor_sum
from .autodiff.tensor import Tensor
from .data.batching import complexes_to_items, pad_and_mask
from .data.residues import MeilerTable, default_meiler_table
from .errors import NumericError

PROB_EPS = 1e-7  # keeps log() finite on saturated sigmoids


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 20
    batch_size: int = 32
    l2: float = 0.01
    dropout_final: float = 0.5
    dropout_hidden: float = 0.15
    seed: int = 0
    class_weighting: bool = False
    grad_clip: float | None = None  # L2-norm clip per tensor; off by default

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("learning rate, epochs, and batch size must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        for rate in (self.dropout_final, self.dropout_hidden):
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"dropout rate {rate} outside [0, 1)")


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float | None
    val_roc_auc: float | None
    seconds: float


# ---------------------------------------------------------------------------
# loss terms
# ---------------------------------------------------------------------------

def masked_bce_loss(probs: Tensor, labels: np.ndarray, mask: np.ndarray,
                    pos_weight: float = 1.0, neg_weight: float = 1.0) -> Tensor:
    """Mean binary cross-entropy over unmasked positions.

    ``probs`` is [B, L, 1] or [B, L]; labels and mask are [B, L].
    Probabilities are clamped away from {0, 1} so the logs stay finite.
    """
    count = float(np.asarray(mask).sum())
    if count == 0:
        raise ValueError("masked_bce_loss: no unmasked positions")
    if probs.ndim == 3:
        probs = probs.reshape(probs.shape[:2])
    y = np.asarray(labels, dtype=probs.dtype.type)
    m = np.asarray(mask, dtype=probs.dtype.type)
    p = clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    pos = mul(mul(log(p), y * m), pos_weight)
    neg = mul(mul(log(sub(1.0, p)), (1.0 - y) * m), neg_weight)
    return mul(add(tensor_sum(pos), tensor_sum(neg)), -1.0 / count)


def l2_penalty(weight_params, lam: float = 0.01) -> Tensor:
    """lam * sum of squared entries over the given weight tensors."""
    total: Tensor | None = None
    for p in weight_params:
        term = tensor_sum(square(p))
        total = term if total is None else add(total, term)
    if total is None:
        return Tensor(np.float32(0.0))
    return mul(total, lam)


def class_weights(labels_mask_pairs) -> tuple[float, float]:
    """Inverse-frequency (neg_weight, pos_weight) over unmasked labels."""
    pos = neg = 0
    for labels, mask in labels_mask_pairs:
        m = np.asarray(mask) > 0
        pos += int((np.asarray(labels)[m] == 1).sum())
        neg += int((np.asarray(labels)[m] == 0).sum())
    total = pos + neg
    if pos == 0 or neg == 0:
        return 1.0, 1.0
    return total / (2.0 * neg), total / (2.0 * pos)


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

class Adam:
    """Bias-corrected adaptive-moment SGD."""

    def __init__(self, params, lr: float = 0.01, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params: list[Parameter] = list(params)
        if not self.params:
            raise ValueError("Adam needs at least one parameter")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grad_clip: float | None = None) -> None:
        if all(p.grad is None for p in self.params):
            raise ValueError("Adam.step called with no gradients populated")
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1 ** t
        bias2 = 1.0 - self.beta2 ** t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            if grad_clip is not None:
                norm = float(np.linalg.norm(g))
                if norm > grad_clip:
                    g = g * (grad_clip / norm)
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self._m[i] / bias1
            v_hat = self._v[i] / bias2
            p.data = p.data - (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.dtype)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def _batches(items, batch_size: int, rng: np.random.Generator):
    """Shuffled batches; a trailing singleton is folded into the previous
    batch because batch norm cannot train on a single row."""
    order = rng.permutation(len(items))
    shuffled = [items[i] for i in order]
    chunks = [shuffled[i:i + batch_size] for i in range(0, len(shuffled), batch_size)]
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        chunks[-2].extend(chunks.pop())
    return chunks


def predict_probabilities(model, complexes, policy: str = "auto", cap: int = 150,
                          table: MeilerTable | None = None,
                          batch_size: int = 32):
    """Inference-mode probabilities and labels pooled over all CDR residues.

    Returns (scores, labels) 1-D arrays covering unmasked positions only.
    """
    items = complexes_to_items(complexes, model.kind == "ag-fast", policy, cap)
    scores, labels = [], []
    for start in range(0, len(items), batch_size):
        batch = pad_and_mask(items[start:start + batch_size], table, dtype=model.dtype)
        with no_grad():
            probs = model.forward(batch, train=False)
        flat = probs.data.reshape(batch.labels.shape)
        keep = batch.ab_mask > 0
        scores.append(flat[keep])
        labels.append(batch.labels[keep])
    return np.concatenate(scores), np.concatenate(labels)


def train(model, complexes, config: TrainConfig, val_complexes=None,
          policy: str = "auto", cap: int = 150,
          table: MeilerTable | None = None) -> list[EpochLog]:
    """Run the full training recipe; returns the per-epoch log.

    The model's dropout rates are taken from ``config``.  Gradients are
    checked for finiteness every step; a NaN loss aborts with
    ``NumericError``.
    """
    if not complexes:
        raise ValueError("training requires a non-empty dataset")
    table = table or default_meiler_table()
    model.hidden_dropout = config.dropout_hidden
    model.final_dropout = config.dropout_final

    seeds = np.random.SeedSequence(config.seed).spawn(2)
    shuffle_rng = np.random.default_rng(seeds[0])
    dropout_rng = np.random.default_rng(seeds[1])

    items = complexes_to_items(complexes, model.kind == "ag-fast", policy, cap)
    neg_w = pos_w = 1.0
    if config.class_weighting:
        neg_w, pos_w = class_weights(
            [(np.asarray(it.cdr.labels), np.ones(len(it.cdr))) for it in items])

    optimizer = Adam(model.parameters().values(), lr=config.learning_rate)
    weights = model.weight_parameters()
    logs = []
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        batch_losses = []
        for chunk in _batches(items, config.batch_size, shuffle_rng):
            batch = pad_and_mask(chunk, table, dtype=model.dtype)
            probs = model.forward(batch, train=True, rng=dropout_rng)
            loss = masked_bce_loss(probs, batch.labels, batch.ab_mask, pos_w, neg_w)
            if config.l2 > 0:
                loss = add(loss, l2_penalty(weights, config.l2))
            value = loss.item()
            if not math.isfinite(value):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step(config.grad_clip)
            batch_losses.append(value)
        train_loss = float(np.mean(batch_losses))

        val_loss = val_auc = None
        if val_complexes:
            scores, labels = predict_probabilities(model, val_complexes, policy, cap, table)
            p = np.clip(scores, PROB_EPS, 1.0 - PROB_EPS)
            val_loss = float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))
            if len(np.unique(labels)) == 2:
                from .evaluation import roc_auc
                val_auc = roc_auc(scores, labels)
        logs.append(EpochLog(epoch=epoch, train_loss=train_loss, val_loss=val_loss,
                             val_roc_auc=val_auc, seconds=time.perf_counter() - started))
    return logs


# ---------------------------------------------------------------------------
# training log CSV
# ---------------------------------------------------------------------------

LOG_COLUMNS = ("epoch", "train_loss", "val_loss", "val_roc_auc", "seconds")


def write_train_log(path, logs) -> None:
    import pathlib

    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for entry in logs:
            writer.writerow([
                entry.epoch,
                f"{entry.train_loss:.8f}",
                "" if entry.val_loss is None else f"{entry.val_loss:.8f}",
                "" if entry.val_roc_auc is None else f"{entry.val_roc_auc:.8f}",
                f"{entry.seconds:.4f}",
            ])


def read_train_log(path) -> list[EpochLog]:
    logs = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            logs.append(EpochLog(
                epoch=int(row["epoch"]),
                train_loss=float(row["train_loss"]),
                val_loss=float(row["val_loss"]) if row["val_loss"] else None,
                val_roc_auc=float(row["val_roc_auc"]) if row["val_roc_auc"] else None,
                seconds=float(row["seconds"]),
            ))
    return logs
