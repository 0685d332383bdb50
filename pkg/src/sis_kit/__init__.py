"""Sufficient input subsets: minimal feature subsets that justify a black-box decision."""

from .masking import compare_imputation, compute_mean_baseline
from .sis import back_select, find_sis, sis_collection
from .types import (
    BackSelectTrace,
    DecisionThreshold,
    FeatureInput,
    ImputationBaseline,
    MaskedInput,
    Rationale,
    SisCollectionResult,
    SufficientInputSubset,
    materialize,
)

__version__ = "0.1.0"

__all__ = [
    "BackSelectTrace",
    "DecisionThreshold",
    "FeatureInput",
    "ImputationBaseline",
    "MaskedInput",
    "Rationale",
    "SisCollectionResult",
    "SufficientInputSubset",
    "back_select",
    "compare_imputation",
    "compute_mean_baseline",
    "find_sis",
    "materialize",
    "sis_collection",
]
