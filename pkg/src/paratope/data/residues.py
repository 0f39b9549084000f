"""Amino-acid alphabet, CDR chain identifiers, and the physicochemical
descriptor table used as a fixed per-residue embedding."""

from __future__ import annotations

import csv
from importlib import resources

import numpy as np

from ..errors import ValidationError

# 20 standard one-letter codes in alphabetical order, then the unknown code.
STANDARD_AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
UNKNOWN_AMINO_ACID = "X"
AMINO_ACIDS = STANDARD_AMINO_ACIDS + UNKNOWN_AMINO_ACID
NUM_AMINO_ACIDS = len(AMINO_ACIDS)  # 21

# Three CDR loops on the heavy chain, three on the light chain.
CHAIN_IDS = ("H1", "H2", "H3", "L1", "L2", "L3")
NUM_CHAIN_IDS = len(CHAIN_IDS)

NUM_DESCRIPTORS = 7

_AA_INDEX = {aa: i for i, aa in enumerate(STANDARD_AMINO_ACIDS)}
_CHAIN_INDEX = {c: i for i, c in enumerate(CHAIN_IDS)}


def amino_acid_index(code: str) -> int:
    """Map a one-letter code to its one-hot index; anything unrecognized
    (including lowercase oddities and non-standard codes) maps to unknown."""
    return _AA_INDEX.get(code.upper(), NUM_AMINO_ACIDS - 1)


def canonical_residues(sequence: str) -> str:
    """Uppercase a sequence and replace unrecognized codes with the unknown code."""
    return "".join(AMINO_ACIDS[amino_acid_index(c)] for c in sequence)


def chain_index(chain: str) -> int:
    try:
        return _CHAIN_INDEX[chain]
    except KeyError:
        raise ValidationError(f"unknown chain id {chain!r}; expected one of {CHAIN_IDS}") from None


class MeilerTable:
    """21 x 7 table of published physicochemical descriptors.

    The row for the unknown residue is the column-wise mean of the 20
    standard rows, which keeps feature scales consistent for rare codes.
    """

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (NUM_AMINO_ACIDS, NUM_DESCRIPTORS):
            raise ValidationError(
                f"descriptor table must be {NUM_AMINO_ACIDS}x{NUM_DESCRIPTORS}, got {values.shape}")
        self.values = values

    @classmethod
    def load(cls, path=None) -> "MeilerTable":
        """Load the CSV asset shipped with the package (or an override file)."""
        if path is None:
            source = resources.files("paratope.data").joinpath("meiler.csv")
            text = source.read_text()
        else:
            with open(path) as fh:
                text = fh.read()
        rows = list(csv.reader(text.strip().splitlines()))
        header, body = rows[0], rows[1:]
        if len(header) != NUM_DESCRIPTORS + 1:
            raise ValidationError(f"descriptor CSV must have {NUM_DESCRIPTORS + 1} columns")
        by_code = {r[0]: [float(v) for v in r[1:]] for r in body}
        missing = [aa for aa in AMINO_ACIDS if aa not in by_code]
        if missing:
            raise ValidationError(f"descriptor CSV missing rows for {missing}")
        return cls(np.array([by_code[aa] for aa in AMINO_ACIDS]))

    def row(self, code: str) -> np.ndarray:
        return self.values[amino_acid_index(code)]


_default_table: MeilerTable | None = None


def default_meiler_table() -> MeilerTable:
    """Shared instance of the shipped descriptor table."""
    global _default_table
    if _default_table is None:
        _default_table = MeilerTable.load()
    return _default_table
