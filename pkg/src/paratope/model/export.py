"""Attention-coefficient export for antigen-aware models.

One record per unmasked antibody residue: complex id, CDR chain, residue
index, and the normalized coefficient over each antigen index in the
residue's neighborhood.  Records serialize to line-delimited JSON so
downstream structure-visualization tooling can consume them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..autodiff import no_grad
from ..data.batching import complexes_to_items, pad_and_mask
from ..data.records import Complex
from ..data.residues import MeilerTable
from ..errors import DataError
from .architectures import ANTIBODY_ANTIGEN


@dataclass(frozen=True)
class AttentionRecord:
    complex_id: str
    chain: str
    residue_index: int
    weights: tuple[tuple[int, float], ...]  # (antigen index, coefficient)


def export_attention(model, cx: Complex, policy: str = "auto", cap: int = 150,
                     table: MeilerTable | None = None) -> list[AttentionRecord]:
    """Cross-modal attention coefficients for every CDR residue of a complex."""
    if model.kind != ANTIBODY_ANTIGEN:
        raise DataError(
            f"attention export needs an antigen-aware model, got kind {model.kind!r}")
    items = complexes_to_items([cx], with_antigen=True, policy=policy, cap=cap)
    batch = pad_and_mask(items, table, dtype=model.dtype)
    with no_grad():
        model.forward(batch, train=False)
    alpha = model.attention.last_alpha
    records = []
    for row, item in enumerate(batch.items):
        for i in range(len(item.cdr)):
            valid = batch.nbr_mask[row, i] > 0
            pairs = tuple(
                (int(j), float(a))
                for j, a in zip(batch.nbr_index[row, i][valid], alpha[row, i][valid])
            )
            records.append(AttentionRecord(
                complex_id=item.complex_id,
                chain=item.cdr.chain,
                residue_index=i,
                weights=pairs,
            ))
    return records


def write_attention_records(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps({
                "complex_id": rec.complex_id,
                "chain": rec.chain,
                "residue_index": rec.residue_index,
                "weights": [[j, a] for j, a in rec.weights],
            }) + "\n")


def read_attention_records(path) -> list[AttentionRecord]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            records.append(AttentionRecord(
                complex_id=rec["complex_id"],
                chain=rec["chain"],
                residue_index=int(rec["residue_index"]),
                weights=tuple((int(j), float(a)) for j, a in rec["weights"]),
            ))
    return records
