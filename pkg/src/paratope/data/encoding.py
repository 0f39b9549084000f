"""Residue featurization.

Antibody residues encode to 34 values: amino-acid one-hot (21), CDR chain
one-hot (6), then the 7 physicochemical descriptors.  Antigen residues
drop the chain block for 28 values.  Encoding is total and deterministic.
"""

from __future__ import annotations

import numpy as np

from .records import AntigenSequence, CdrSequence
from .residues import (
    AMINO_ACIDS,
    CHAIN_IDS,
    NUM_AMINO_ACIDS,
    NUM_CHAIN_IDS,
    NUM_DESCRIPTORS,
    MeilerTable,
    amino_acid_index,
    chain_index,
    default_meiler_table,
)

ANTIBODY_FEATURES = NUM_AMINO_ACIDS + NUM_CHAIN_IDS + NUM_DESCRIPTORS  # 34
ANTIGEN_FEATURES = NUM_AMINO_ACIDS + NUM_DESCRIPTORS  # 28


def encode_antibody_residue(aa: str, chain: str, table: MeilerTable | None = None,
                            dtype=np.float32) -> np.ndarray:
    """[aa one-hot (21) | chain one-hot (6) | descriptors (7)] for one residue."""
    table = table or default_meiler_table()
    vec = np.zeros(ANTIBODY_FEATURES, dtype=dtype)
    ai = amino_acid_index(aa)
    vec[ai] = 1.0
    vec[NUM_AMINO_ACIDS + chain_index(chain)] = 1.0
    vec[NUM_AMINO_ACIDS + NUM_CHAIN_IDS:] = table.values[ai]
    return vec


def encode_antigen_residue(aa: str, table: MeilerTable | None = None,
                           dtype=np.float32) -> np.ndarray:
    """[aa one-hot (21) | descriptors (7)] for one antigen residue."""
    table = table or default_meiler_table()
    vec = np.zeros(ANTIGEN_FEATURES, dtype=dtype)
    ai = amino_acid_index(aa)
    vec[ai] = 1.0
    vec[NUM_AMINO_ACIDS:] = table.values[ai]
    return vec


def encode_cdr(cdr: CdrSequence, table: MeilerTable | None = None,
               dtype=np.float32) -> np.ndarray:
    """[L, 34] feature matrix for one CDR; every row shares the chain block."""
    table = table or default_meiler_table()
    return np.stack([encode_antibody_residue(aa, cdr.chain, table, dtype)
                     for aa in cdr.residues])


def encode_antigen(antigen: AntigenSequence, table: MeilerTable | None = None,
                   dtype=np.float32) -> np.ndarray:
    """[N, 28] feature matrix for the full antigen sequence."""
    table = table or default_meiler_table()
    return np.stack([encode_antigen_residue(aa, table, dtype) for aa in antigen.residues])


def decode_antibody_features(features: np.ndarray) -> tuple[str, str]:
    """Recover (residues, chain) from an antibody feature matrix [L, 34]."""
    aa_idx = features[:, :NUM_AMINO_ACIDS].argmax(axis=1)
    residues = "".join(AMINO_ACIDS[i] for i in aa_idx)
    chain_idx = features[:, NUM_AMINO_ACIDS:NUM_AMINO_ACIDS + NUM_CHAIN_IDS].argmax(axis=1)
    chains = {CHAIN_IDS[i] for i in chain_idx}
    if len(chains) != 1:
        raise ValueError(f"feature matrix mixes chain encodings: {sorted(chains)}")
    return residues, chains.pop()


def decode_antigen_features(features: np.ndarray) -> str:
    """Recover the residue string from an antigen feature matrix [N, 28]."""
    aa_idx = features[:, :NUM_AMINO_ACIDS].argmax(axis=1)
    return "".join(AMINO_ACIDS[i] for i in aa_idx)
