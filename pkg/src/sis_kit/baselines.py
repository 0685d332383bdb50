"""Comparison rationale methods.

All orderings follow the backward-selection convention: the list runs from
least to most important, and assembly pops from the end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models.base import Evaluator
from .sis import MaskedScorer, _find_sis
from .types import (
    DecisionThreshold,
    DimensionError,
    FeatureInput,
    ImputationBaseline,
    Rationale,
    SisCollectionResult,
)


@dataclass(frozen=True)
class AttributionScores:
    """Per-feature attribution magnitudes computed outside the toolkit (IG, LIME, ...)."""

    input_ref: str
    scores: tuple

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))

    def check_length(self, x: FeatureInput):
        if len(self.scores) != x.p:
            raise DimensionError(
                f"attribution scores for {self.input_ref!r} have length {len(self.scores)}, input has {x.p} features"
            )

    def to_dict(self) -> dict:
        return {"input_ref": self.input_ref, "scores": list(self.scores)}

    @classmethod
    def from_dict(cls, d) -> "AttributionScores":
        return cls(d["input_ref"], tuple(d["scores"]))


def load_attributions(path) -> dict:
    """Read an attribution JSONL file into ``{input_ref: AttributionScores}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                a = AttributionScores.from_dict(json.loads(line))
                out[a.input_ref] = a
    return out


def feature_importance(model: Evaluator, x: FeatureInput, baseline: ImputationBaseline, direction: str = "above") -> np.ndarray:
    """``f(x) - f(x with feature i masked)`` for every feature; ``p + 1`` evaluations in one batch."""
    scorer = MaskedScorer(model, x, baseline, DecisionThreshold(0.0, direction).sign)
    masks = np.ones((x.p + 1, x.p), dtype=bool)
    masks[np.arange(1, x.p + 1), np.arange(x.p)] = False
    f = scorer.scores(masks)
    return f[0] - f[1:]


def ordering_from_scores(scores: Sequence[float]) -> list:
    """Ascending by score, ties by lowest index, so the most important feature is last."""
    scores = np.asarray(scores, dtype=np.float64)
    return [int(i) for i in np.argsort(scores, kind="stable")]


def perturbation_ordering(model: Evaluator, x: FeatureInput, baseline: ImputationBaseline, direction: str = "above") -> list:
    return ordering_from_scores(feature_importance(model, x, baseline, direction))


def assemble_sufficiency(
    model: Evaluator,
    x: FeatureInput,
    tau,
    R: Sequence[int],
    baseline: ImputationBaseline,
    method_tag: str = "suff_perturb",
) -> Rationale:
    """FindSIS over an externally supplied ordering.

    If the ordering runs out before the threshold is met the rationale holds
    every feature of ``R`` and ``sufficiency_met`` is False.
    """
    thr = DecisionThreshold.coerce(tau)
    scorer = MaskedScorer(model, x, baseline, thr.sign)
    found = _find_sis(scorer, thr.oriented_tau, R)
    if found is None:
        idx = list(reversed([int(i) for i in R]))
        return Rationale(method_tag, idx, scorer.score_set(idx), False, x.source_id)
    return Rationale(method_tag, found.indices, found.achieved_score, True, x.source_id)


def assemble_length_constrained(
    x: FeatureInput,
    R: Sequence[int],
    k: int,
    *,
    model: Evaluator,
    tau,
    baseline: ImputationBaseline,
    method_tag: str = "perturb_len",
) -> Rationale:
    """The last ``k`` features of ``R`` (in pop order), sufficient or not."""
    R = [int(i) for i in R]
    if not 1 <= k <= x.p:
        raise ValueError(f"k must be in [1, {x.p}], got {k}")
    idx = list(reversed(R))[: min(k, len(R))]
    thr = DecisionThreshold.coerce(tau)
    score = MaskedScorer(model, x, baseline, thr.sign).score_set(idx)
    return Rationale(method_tag, idx, score, score >= thr.oriented_tau, x.source_id)


def assemble_attribution_budget(
    model: Evaluator,
    x: FeatureInput,
    tau,
    scores: AttributionScores,
    zero_ref_score: float,
    baseline: ImputationBaseline,
    method_tag: str = "top_attrib",
) -> Rationale:
    """Add features by descending attribution until their summed attribution
    reaches ``tau - zero_ref_score``.

    A non-positive budget yields the single top feature. If the whole input
    cannot reach the budget, every feature is returned with
    ``budget_reached=False``. Sufficiency is measured on ``baseline`` but
    not enforced.
    """
    scores.check_length(x)
    thr = DecisionThreshold.coerce(tau)
    budget = thr.tau - float(zero_ref_score)
    s = np.asarray(scores.scores)
    order = [int(i) for i in np.argsort(-s, kind="stable")]
    if budget <= 0:
        idx, reached = order[:1], True
    else:
        idx, reached, total = [], False, 0.0
        for i in order:
            idx.append(i)
            total += s[i]
            if total >= budget:
                reached = True
                break
    score = MaskedScorer(model, x, baseline, thr.sign).score_set(idx)
    return Rationale(method_tag, idx, score, score >= thr.oriented_tau, x.source_id, reached)


def sis_length_for(result: SisCollectionResult, mode: str = "median") -> int | None:
    """Length budget for length-constrained methods from one input's SIS collection.

    ``median`` rounds half up; ``first`` uses the first SIS. ``None`` when
    the collection is empty.
    """
    if not result.sis_list:
        return None
    if mode == "first":
        return len(result.sis_list[0])
    if mode != "median":
        raise ValueError(f"unknown length mode {mode!r}")
    return int(math.floor(float(np.median([len(s) for s in result.sis_list])) + 0.5))
