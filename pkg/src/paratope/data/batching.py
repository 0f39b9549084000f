"""Padding, masking, and tensor assembly for mini-batches.

A batch row is one CDR; antibody-only batches omit the antigen side.
Masks are 1.0 on real positions and 0.0 on padding.  Neighborhoods are
encoded as an index tensor plus a validity mask over a shared slot axis,
which restricts attention to each residue's antigen index set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor
from ..errors import ValidationError
from .contacts import ensure_neighborhoods
from .encoding import encode_antigen, encode_cdr
from .records import AntigenSequence, CdrSequence, Complex, Neighborhood
from .residues import MeilerTable, default_meiler_table


@dataclass(frozen=True)
class BatchItem:
    """One training/eval sequence: a CDR with optional antigen context."""

    cdr: CdrSequence
    antigen: AntigenSequence | None = None
    neighborhood: Neighborhood | None = None
    complex_id: str = ""


@dataclass
class Batch:
    """Padded tensors for one mini-batch; ``items`` keeps row provenance."""

    ab: Tensor                        # [B, L_ab, 34]
    ab_mask: np.ndarray               # [B, L_ab] 1 on real residues
    labels: np.ndarray                # [B, L_ab] binary, 0 on padding
    ag: Tensor | None = None          # [B, L_ag, 28]
    ag_mask: np.ndarray | None = None  # [B, L_ag]
    nbr_index: np.ndarray | None = None  # [B, L_ab, C] antigen indices
    nbr_mask: np.ndarray | None = None   # [B, L_ab, C] 1 on valid slots
    items: tuple[BatchItem, ...] = ()

    @property
    def size(self) -> int:
        return self.ab.shape[0]


def complexes_to_items(complexes, with_antigen: bool,
                       policy: str = "auto", cap: int = 150) -> list[BatchItem]:
    """Flatten complexes into per-CDR batch items.

    With antigen context, neighborhoods are taken from the complex or built
    with the given policy.
    """
    items = []
    for cx in complexes:
        hoods = ensure_neighborhoods(cx, policy, cap) if with_antigen else None
        for k, cdr in enumerate(cx.cdrs):
            items.append(BatchItem(
                cdr=cdr,
                antigen=cx.antigen if with_antigen else None,
                neighborhood=hoods[k] if with_antigen else None,
                complex_id=cx.id,
            ))
    return items


def pad_and_mask(items, table: MeilerTable | None = None, dtype=np.float32) -> Batch:
    """Featurize and pad a list of ``BatchItem`` into batch tensors.

    L_ab and L_ag are the per-batch maxima; the neighbor slot axis is the
    largest neighborhood in the batch.  Padded neighbor slots point at
    index 0 with a zero validity mask, so they never contribute.
    """
    items = list(items)
    if not items:
        raise ValidationError("pad_and_mask requires a non-empty batch")
    items = tuple(it if isinstance(it, BatchItem) else BatchItem(*it) for it in items)
    table = table or default_meiler_table()

    batch = len(items)
    l_ab = max(len(it.cdr) for it in items)
    ab = np.zeros((batch, l_ab, encode_cdr(items[0].cdr, table, dtype).shape[1]), dtype=dtype)
    ab_mask = np.zeros((batch, l_ab), dtype=dtype)
    labels = np.zeros((batch, l_ab), dtype=dtype)
    for r, it in enumerate(items):
        feats = encode_cdr(it.cdr, table, dtype)
        ab[r, :len(it.cdr)] = feats
        ab_mask[r, :len(it.cdr)] = 1.0
        labels[r, :len(it.cdr)] = it.cdr.labels

    with_antigen = any(it.antigen is not None for it in items)
    if not with_antigen:
        return Batch(ab=Tensor(ab), ab_mask=ab_mask, labels=labels, items=items)

    if any(it.antigen is None or it.neighborhood is None for it in items):
        raise ValidationError(
            "mixed batch: every item needs an antigen and a neighborhood, or none")
    l_ag = max(len(it.antigen) for it in items)
    slots = max(max((len(idx) for idx in it.neighborhood.indices), default=1)
                for it in items)
    ag = np.zeros((batch, l_ag, encode_antigen(items[0].antigen, table, dtype).shape[1]),
                  dtype=dtype)
    ag_mask = np.zeros((batch, l_ag), dtype=dtype)
    nbr_index = np.zeros((batch, l_ab, slots), dtype=np.int64)
    nbr_mask = np.zeros((batch, l_ab, slots), dtype=dtype)
    for r, it in enumerate(items):
        ag[r, :len(it.antigen)] = encode_antigen(it.antigen, table, dtype)
        ag_mask[r, :len(it.antigen)] = 1.0
        for i, idx in enumerate(it.neighborhood.indices):
            nbr_index[r, i, :len(idx)] = idx
            nbr_mask[r, i, :len(idx)] = 1.0
    return Batch(ab=Tensor(ab), ab_mask=ab_mask, labels=labels,
                 ag=Tensor(ag), ag_mask=ag_mask,
                 nbr_index=nbr_index, nbr_mask=nbr_mask, items=items)


def unpad_batch(batch: Batch) -> list[tuple[str, str, tuple[int, ...]]]:
    """Recover (residues, chain, labels) per row using the masks.

    Round-trip counterpart of ``pad_and_mask`` used to verify that padding
    is lossless.
    """
    from .encoding import decode_antibody_features

    out = []
    for r in range(batch.size):
        n = int(batch.ab_mask[r].sum())
        residues, chain = decode_antibody_features(batch.ab.data[r, :n])
        row_labels = tuple(int(v) for v in batch.labels[r, :n])
        out.append((residues, chain, row_labels))
    return out
