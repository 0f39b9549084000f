"""Model blocks and the two full architectures."""

from .architectures import (
    ANTIBODY_ANTIGEN,
    ANTIBODY_ONLY,
    MODEL_KINDS,
    AntibodyAntigenModel,
    AntibodyOnlyModel,
    load_model,
    make_model,
)
from .export import (
    AttentionRecord,
    export_attention,
    read_attention_records,
    write_attention_records,
)
from .layers import (
    ATROUS_LAYERS,
    FEATURE_DIM,
    AtrousStack,
    ClassifierHead,
    CrossModalAttention,
    SelfAttention,
)

__all__ = [
    "ANTIBODY_ANTIGEN",
    "ANTIBODY_ONLY",
    "ATROUS_LAYERS",
    "AntibodyAntigenModel",
    "AntibodyOnlyModel",
    "AtrousStack",
    "AttentionRecord",
    "ClassifierHead",
    "CrossModalAttention",
    "FEATURE_DIM",
    "MODEL_KINDS",
    "SelfAttention",
    "export_attention",
    "load_model",
    "make_model",
    "read_attention_records",
    "write_attention_records",
]
