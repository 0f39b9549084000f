"""Paratope prediction: featurization, a minimal autodiff tensor core,
dilated-convolution/attention models, training, and crossvalidated
evaluation."""

from . import autodiff, data, evaluation, model, training
from .errors import (
    DataError,
    NumericError,
    ParatopeError,
    ParseError,
    ValidationError,
    WeightsFormatError,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "NumericError",
    "ParatopeError",
    "ParseError",
    "ValidationError",
    "WeightsFormatError",
    "autodiff",
    "data",
    "evaluation",
    "model",
    "training",
]
