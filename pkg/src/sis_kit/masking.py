"""Imputation baselines and the mean-vs-hot-deck comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .models.base import Evaluator
from .types import DimensionError, FeatureInput, ImputationBaseline


def compute_mean_baseline(
    dataset: Iterable[FeatureInput],
    variable_length: bool = False,
    schema_id: str = "mean",
) -> ImputationBaseline:
    """Mask vectors from dataset feature means.

    Fixed-schema data gets one mean per feature position. With
    ``variable_length=True`` every position of every input is pooled into a
    single shared mask vector.
    """
    rows = []
    dims = None
    for x in dataset:
        if variable_length:
            if dims is None:
                dims = x.dims[0]
            if any(d != dims for d in x.dims):
                raise DimensionError(
                    f"input {x.source_id!r}: feature dimensions {set(x.dims)} differ from {dims}"
                )
            rows.extend(x.features)
        else:
            if dims is None:
                dims = x.dims
            if x.dims != dims:
                raise DimensionError(
                    f"input {x.source_id!r}: dims {x.dims} differ from the dataset schema {dims}"
                )
            rows.append(x.flat())
    if not rows:
        raise ValueError("cannot compute a baseline from an empty dataset")
    # fsum is correctly rounded, so the mean does not depend on input order
    cols = np.stack(rows).T
    mean = np.array([math.fsum(c) for c in cols]) / len(rows)
    if variable_length:
        return ImputationBaseline((mean,), schema_id, shared=True)
    off = np.concatenate([[0], np.cumsum(dims)])
    return ImputationBaseline(tuple(mean[off[i] : off[i + 1]] for i in range(len(dims))), schema_id)


def zero_baseline(x: FeatureInput) -> ImputationBaseline:
    """All-zeros mask (the reference point for attribution budgets). Never the default."""
    return ImputationBaseline.zeros_like(x)


@dataclass
class ImputationComparisonReport:
    n_samples: int
    mean_imputation_mean: float
    mean_imputation_std: float
    hot_deck_mean: float
    hot_deck_std: float
    mean_deltas: list = field(default_factory=list)
    hot_deck_deltas: list = field(default_factory=list)
    draws: list = field(default_factory=list)

    def to_dict(self, include_samples: bool = True) -> dict:
        d = {
            "n_samples": self.n_samples,
            "mean_imputation_mean": self.mean_imputation_mean,
            "mean_imputation_std": self.mean_imputation_std,
            "hot_deck_mean": self.hot_deck_mean,
            "hot_deck_std": self.hot_deck_std,
        }
        if include_samples:
            d["mean_deltas"] = self.mean_deltas
            d["hot_deck_deltas"] = self.hot_deck_deltas
            d["draws"] = self.draws
        return d


def compare_imputation(
    model: Evaluator,
    dataset,
    n_samples: int,
    rng_seed: int,
    baseline: Optional[ImputationBaseline] = None,
) -> ImputationComparisonReport:
    """Compare ``f(x with feature i masked) - f(x)`` under both masking strategies.

    Each draw picks an input and a feature uniformly at random, then masks
    the feature once with its mean vector and once with a value resampled
    from the dataset (hot-deck: same position for fixed schemas, any
    position of any input for variable-length data).
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    data = list(dataset)
    if not data:
        raise ValueError("cannot compare imputations on an empty dataset")
    variable = len({x.dims for x in data}) > 1
    if baseline is None:
        baseline = compute_mean_baseline(data, variable_length=variable)
    rng = np.random.default_rng(rng_seed)

    pooled = None
    if variable or baseline.shared:
        pooled = [(j, k) for j, x in enumerate(data) for k in range(x.p)]

    mean_d = np.empty(n_samples)
    hot_d = np.empty(n_samples)
    draws = []
    for t in range(n_samples):
        j = int(rng.integers(len(data)))
        x = data[j]
        i = int(rng.integers(x.p))
        if pooled is not None:
            dj, dk = pooled[int(rng.integers(len(pooled)))]
        else:
            dj, dk = int(rng.integers(len(data))), i
        donor = data[dj].features[dk]
        mean_x = _replace(x, i, baseline.vector_for(i))
        hot_x = _replace(x, i, donor)
        f = model.evaluate([x, mean_x, hot_x])
        mean_d[t] = f[1] - f[0]
        hot_d[t] = f[2] - f[0]
        draws.append([j, i, dj, dk])
    return ImputationComparisonReport(
        n_samples,
        float(mean_d.mean()),
        float(mean_d.std(ddof=1)) if n_samples > 1 else 0.0,
        float(hot_d.mean()),
        float(hot_d.std(ddof=1)) if n_samples > 1 else 0.0,
        mean_d.tolist(),
        hot_d.tolist(),
        draws,
    )


def _replace(x: FeatureInput, i: int, v) -> FeatureInput:
    feats = list(x.features)
    feats[i] = v
    return FeatureInput(tuple(feats), x.source_id, x.token_labels)
