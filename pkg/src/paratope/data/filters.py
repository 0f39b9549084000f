"""Complex-level dataset filters: resolution, label support, and pairwise
sequence-identity deduplication."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ValidationError
from .alignment import seq_identity
from .records import Complex


@dataclass(frozen=True)
class FilterCriteria:
    """Criteria a complex must meet to be retained; None disables a criterion.

    ``max_resolution`` keeps structures resolved strictly better than the
    bound; ``max_identity`` drops the later of any pair of complexes whose
    antibody sequences exceed the bound; ``min_positive_labels`` requires
    that many binding residues across the complex.
    """

    max_resolution: float | None = 3.0
    max_identity: float | None = 0.95
    min_positive_labels: int | None = 5
    gap_penalty: float = 1.0


def filter_complexes(complexes, criteria: FilterCriteria = FilterCriteria()) -> list[Complex]:
    """Apply all enabled criteria, preserving input order of retained items.

    Identity conflicts drop the later record, so the pass is idempotent:
    filtering an already-filtered list returns it unchanged.
    """
    kept: list[Complex] = []
    for cx in complexes:
        if criteria.max_resolution is not None:
            if cx.resolution is None:
                raise ValidationError(
                    f"complex {cx.id}: resolution filter enabled but resolution missing")
            if cx.resolution >= criteria.max_resolution:
                continue
        if criteria.min_positive_labels is not None:
            if cx.positive_label_count < criteria.min_positive_labels:
                continue
        if criteria.max_identity is not None:
            seq = cx.antibody_sequence
            if any(seq_identity(seq, prev.antibody_sequence, criteria.gap_penalty)
                   > criteria.max_identity for prev in kept):
                continue
        kept.append(cx)
    return kept
