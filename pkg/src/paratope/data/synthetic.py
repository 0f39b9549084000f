"""Synthetic complexes with learnable labels, for demos and sanity checks.

Two labeling rules:

* ``ab_motif``: a residue binds iff its own amino acid is in a motif set.
  Learnable from the antibody sequence alone.
* ``ag_window``: a residue binds iff tryptophan is frequent enough inside
  its antigen neighborhood window.  The antibody sequence carries no
  signal, so only antigen-aware models can learn it.
"""

from __future__ import annotations

import numpy as np

from .contacts import build_neighborhood
from .records import AntigenSequence, CdrSequence, Complex
from .residues import CHAIN_IDS, STANDARD_AMINO_ACIDS


def _random_sequence(rng: np.random.Generator, length: int, alphabet: str) -> str:
    return "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=length))


def synthetic_complexes(
    count: int,
    seed: int = 0,
    rule: str = "ab_motif",
    cdrs_per_complex: int = 2,
    cdr_length: tuple[int, int] = (8, 14),
    antigen_length: int = 48,
    motif: str = "WYF",
    window: int = 7,
    min_tryptophans: int = 2,
) -> list[Complex]:
    """Generate ``count`` labeled complexes under the given rule."""
    rng = np.random.default_rng(seed)
    complexes = []
    for n in range(count):
        antigen = AntigenSequence(_random_sequence(rng, antigen_length, "AW" if rule == "ag_window" else STANDARD_AMINO_ACIDS))
        cdrs = []
        hoods = []
        chains = rng.choice(len(CHAIN_IDS), size=cdrs_per_complex, replace=False)
        for c in sorted(chains):
            length = int(rng.integers(cdr_length[0], cdr_length[1] + 1))
            residues = _random_sequence(rng, length, STANDARD_AMINO_ACIDS)
            placeholder = CdrSequence(chain=CHAIN_IDS[c], residues=residues,
                                      labels=(0,) * length)
            hood = build_neighborhood(placeholder, antigen, policy="window", cap=window)
            if rule == "ab_motif":
                labels = tuple(int(aa in motif) for aa in residues)
            elif rule == "ag_window":
                labels = tuple(
                    int(sum(antigen.residues[j] == "W" for j in idx) >= min_tryptophans)
                    for idx in hood.indices)
            else:
                raise ValueError(f"unknown labeling rule {rule!r}")
            cdrs.append(CdrSequence(chain=CHAIN_IDS[c], residues=residues, labels=labels))
            hoods.append(hood)
        complexes.append(Complex(
            id=f"syn{n:04d}",
            cdrs=tuple(cdrs),
            antigen=antigen,
            neighborhoods=tuple(hoods),
            resolution=2.0,
        ))
    return complexes
