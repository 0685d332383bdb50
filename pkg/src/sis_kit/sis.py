"""Backward selection, FindSIS and the SIS-collection driver.

Every score here is *oriented*: for a ``below`` decision the model output
is negated, so the sufficiency test is always ``score >= tau``.
"""

from __future__ import annotations

import logging
from typing import Iterable, Optional, Sequence

import numpy as np

from .models.base import Evaluator, EvaluatorError
from .types import (
    BackSelectTrace,
    DecisionCriterionError,
    DecisionThreshold,
    FeatureInput,
    ImputationBaseline,
    SisCollectionResult,
    SufficientInputSubset,
)

log = logging.getLogger(__name__)


class MaskedScorer:
    """Scores masked variants of one input.

    ``scores(masks)`` takes a boolean ``(B, p)`` array (True = keep the
    observed value) and returns oriented scores for the ``B`` variants.
    """

    def __init__(self, model: Evaluator, x: FeatureInput, baseline: ImputationBaseline, sign: float = 1.0):
        self.model = model
        self.x = x
        self.p = x.p
        self.dims = x.dims
        self.sign = float(sign)
        self._x = x.flat()
        self._z = baseline.flat_for(x)
        self._col = np.repeat(np.arange(x.p), x.dims)

    def scores(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=bool).reshape(-1, self.p)
        X = np.where(masks[:, self._col], self._x, self._z)
        return self.sign * self.model(X, self.dims)

    def mask_of(self, S: Iterable[int]) -> np.ndarray:
        m = np.zeros(self.p, dtype=bool)
        m[list(S)] = True
        return m

    def score_set(self, S: Iterable[int]) -> float:
        return float(self.scores(self.mask_of(S)[None])[0])


def _sign_for(direction: str) -> float:
    return DecisionThreshold(0.0, direction).sign


def _check_subset(S, p) -> list:
    S = sorted({int(i) for i in S})
    for i in S:
        if not 0 <= i < p:
            raise IndexError(f"feature index {i} out of range for p={p}")
    return S


def _back_select(scorer: MaskedScorer, S: Sequence[int]) -> BackSelectTrace:
    remaining = _check_subset(S, scorer.p)
    if not remaining:
        raise ValueError("back_select needs a nonempty feature set")
    current = scorer.mask_of(remaining)
    removal, history = [], []
    step = 0
    while remaining:
        cand = np.asarray(remaining)
        masks = np.repeat(current[None], cand.size, axis=0)
        masks[np.arange(cand.size), cand] = False
        try:
            scores = scorer.scores(masks)
        except Exception as e:
            raise EvaluatorError(f"back_select step {step}: {e}") from e
        # remaining is sorted, so the first maximum is the lowest index
        j = int(np.argmax(scores))
        i_star = remaining.pop(j)
        current[i_star] = False
        removal.append(i_star)
        history.append(float(scores[j]))
        step += 1
    return BackSelectTrace(tuple(removal), tuple(history))


def _find_sis(scorer: MaskedScorer, tau: float, R: Sequence[int]) -> Optional[SufficientInputSubset]:
    R = [int(i) for i in R]
    if not R:
        raise ValueError("find_sis needs a nonempty ordering")
    position = {i: k for k, i in enumerate(R)}
    S: list = []
    score = -np.inf
    # pop at least once: a SIS is never empty
    while R and (not S or score < tau):
        S.append(R.pop())
        score = scorer.score_set(S)
    if score >= tau:
        return SufficientInputSubset(tuple(S), score, tuple(position[i] for i in S))
    return None


def back_select(
    model: Evaluator,
    x: FeatureInput,
    S: Iterable[int],
    baseline: ImputationBaseline,
    direction: str = "above",
) -> BackSelectTrace:
    """Remove features from ``S`` one at a time, always the one whose masking
    leaves the highest score, until ``S`` is empty.

    Each step scores all ``|S|`` candidates in one batch. Ties go to the
    lowest feature index.
    """
    return _back_select(MaskedScorer(model, x, baseline, _sign_for(direction)), S)


def find_sis(
    model: Evaluator,
    x: FeatureInput,
    tau,
    R: Sequence[int],
    baseline: ImputationBaseline,
) -> Optional[SufficientInputSubset]:
    """Pop features from the end of ``R`` until the kept set meets ``tau``.

    Returns ``None`` if ``R`` runs out first.
    """
    thr = DecisionThreshold.coerce(tau)
    return _find_sis(MaskedScorer(model, x, baseline, thr.sign), thr.oriented_tau, R)


def sis_collection(
    model: Evaluator,
    x: FeatureInput,
    tau,
    baseline: ImputationBaseline,
) -> SisCollectionResult:
    """Extract disjoint sufficient input subsets from ``x`` until the features
    left over no longer support the decision.

    Raises ``DecisionCriterionError`` if ``x`` itself does not meet the
    decision. If the fully masked input already meets it, the result is an
    empty collection with ``default_decision=True``.
    """
    thr = DecisionThreshold.coerce(tau)
    tau_o = thr.oriented_tau
    scorer = MaskedScorer(model, x, baseline, thr.sign)
    everything = list(range(x.p))
    full = scorer.score_set(everything)
    if full < tau_o:
        raise DecisionCriterionError(
            f"decision criterion not met for input {x.source_id!r}: "
            f"score {thr.sign * full!r} vs tau {thr.tau!r} ({thr.direction})"
        )
    if scorer.score_set(()) >= tau_o:
        log.debug("input %r: masked input already meets the decision", x.source_id)
        return SisCollectionResult(x.source_id, (), full, (), thr, full, default_decision=True)

    remaining = everything
    remaining_score = full
    found, traces = [], []
    while remaining and remaining_score >= tau_o:
        trace = _back_select(scorer, remaining)
        sis = _find_sis(scorer, tau_o, trace.removal_order)
        if sis is None:  # cannot happen for a sufficient remaining set, kept as a guard
            break
        found.append(sis)
        traces.append(trace)
        taken = sis.as_set()
        remaining = [i for i in remaining if i not in taken]
        remaining_score = scorer.score_set(remaining)
    return SisCollectionResult(x.source_id, tuple(found), remaining_score, tuple(traces), thr, full)
