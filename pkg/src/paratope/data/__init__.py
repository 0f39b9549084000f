"""Dataset parsing, filtering, labeling, featurization, and batching."""

from .alignment import align_global, seq_identity
from .batching import Batch, BatchItem, complexes_to_items, pad_and_mask, unpad_batch
from .cdr_windows import CHOTHIA_WINDOWS, extract_cdrs, parse_position
from .contacts import (
    DEFAULT_CONTACT_THRESHOLD,
    build_neighborhood,
    ensure_neighborhoods,
    label_contacts,
)
from .encoding import (
    ANTIBODY_FEATURES,
    ANTIGEN_FEATURES,
    decode_antibody_features,
    decode_antigen_features,
    encode_antibody_residue,
    encode_antigen,
    encode_antigen_residue,
    encode_cdr,
)
from .filters import FilterCriteria, filter_complexes
from .records import (
    MAX_ANTIGEN_LENGTH,
    MAX_CDR_LENGTH,
    MAX_NEIGHBORS,
    AntigenSequence,
    CdrSequence,
    Complex,
    Neighborhood,
    parse_dataset,
    write_dataset,
)
from .residues import (
    AMINO_ACIDS,
    CHAIN_IDS,
    MeilerTable,
    amino_acid_index,
    canonical_residues,
    chain_index,
    default_meiler_table,
)
from .synthetic import synthetic_complexes

__all__ = [
    "AMINO_ACIDS",
    "ANTIBODY_FEATURES",
    "ANTIGEN_FEATURES",
    "AntigenSequence",
    "Batch",
    "BatchItem",
    "CHAIN_IDS",
    "CHOTHIA_WINDOWS",
    "CdrSequence",
    "Complex",
    "DEFAULT_CONTACT_THRESHOLD",
    "FilterCriteria",
    "MAX_ANTIGEN_LENGTH",
    "MAX_CDR_LENGTH",
    "MAX_NEIGHBORS",
    "MeilerTable",
    "Neighborhood",
    "align_global",
    "amino_acid_index",
    "build_neighborhood",
    "canonical_residues",
    "chain_index",
    "complexes_to_items",
    "decode_antibody_features",
    "decode_antigen_features",
    "default_meiler_table",
    "encode_antibody_residue",
    "encode_antigen",
    "encode_antigen_residue",
    "encode_cdr",
    "ensure_neighborhoods",
    "extract_cdrs",
    "filter_complexes",
    "label_contacts",
    "pad_and_mask",
    "parse_dataset",
    "parse_position",
    "seq_identity",
    "synthetic_complexes",
    "unpad_batch",
    "write_dataset",
]
