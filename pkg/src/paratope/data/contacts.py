"""Coordinate-based contact labeling and attention-neighborhood construction."""

from __future__ import annotations

import numpy as np

from ..errors import DataError, ValidationError
from .records import MAX_NEIGHBORS, AntigenSequence, CdrSequence, Neighborhood

DEFAULT_CONTACT_THRESHOLD = 4.5  # Angstrom


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between two [n,3] and [m,3] point sets."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def label_contacts(cdr_coords, antigen_coords,
                   threshold: float = DEFAULT_CONTACT_THRESHOLD) -> tuple[int, ...]:
    """Per-residue binding labels from representative-point coordinates.

    A residue is labeled 1 iff its distance to the closest antigen point is
    strictly below ``threshold``.
    """
    if cdr_coords is None or antigen_coords is None:
        raise DataError(
            "contact labeling needs coordinates on both sides; "
            "supply precomputed labels in the dataset instead")
    a = np.asarray(cdr_coords, dtype=np.float64)
    b = np.asarray(antigen_coords, dtype=np.float64)
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValidationError("contact labeling requires finite coordinates")
    nearest = _distances(a, b).min(axis=1)
    return tuple(int(d < threshold) for d in nearest)


def build_neighborhood(cdr: CdrSequence, antigen: AntigenSequence,
                       policy: str = "spatial", cap: int = MAX_NEIGHBORS) -> Neighborhood:
    """Antigen index set each antibody residue may attend over, capped.

    ``spatial`` takes the ``cap`` nearest antigen residues by Euclidean
    distance (ties broken by index) and needs coordinates on both sides.
    ``window`` takes a contiguous antigen window of width <= ``cap``,
    centered by mapping the residue's relative position onto the antigen.
    """
    if not 1 <= cap <= MAX_NEIGHBORS:
        raise ValidationError(f"cap must be in [1, {MAX_NEIGHBORS}], got {cap}")
    n = len(antigen)
    if policy == "spatial":
        if cdr.coords is None or antigen.coords is None:
            raise DataError("spatial neighborhood policy requires coordinates "
                            "on the CDR and the antigen")
        dists = _distances(np.asarray(cdr.coords), np.asarray(antigen.coords))
        rows = []
        for i in range(len(cdr)):
            order = np.lexsort((np.arange(n), dists[i]))
            rows.append(tuple(sorted(int(j) for j in order[:cap])))
        return Neighborhood(tuple(rows))
    if policy == "window":
        width = min(cap, n)
        rows = []
        for i in range(len(cdr)):
            center = round(i * (n - 1) / max(len(cdr) - 1, 1))
            start = min(max(center - width // 2, 0), n - width)
            rows.append(tuple(range(start, start + width)))
        return Neighborhood(tuple(rows))
    raise ValueError(f"unknown neighborhood policy {policy!r}")


def ensure_neighborhoods(cx, policy: str = "auto", cap: int = MAX_NEIGHBORS):
    """Neighborhoods for every CDR of a complex, building them if absent.

    ``auto`` picks spatial when both sides carry coordinates, else window.
    """
    if cx.neighborhoods is not None:
        return cx.neighborhoods
    if policy == "auto":
        has_coords = cx.antigen.coords is not None and all(
            c.coords is not None for c in cx.cdrs)
        policy = "spatial" if has_coords else "window"
    return tuple(build_neighborhood(cdr, cx.antigen, policy, cap) for cdr in cx.cdrs)
