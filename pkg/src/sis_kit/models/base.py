"""Evaluator interface.

An evaluator scores a batch of inputs laid out as a 2-D array ``X`` of shape
``(B, D)`` where each row is ``FeatureInput.flat()`` and ``dims`` gives the
per-feature dimensions needed to split a row back into features.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from ..types import DimensionError, FeatureInput


class EvaluatorError(RuntimeError):
    """Raised when a model fails to produce scores."""


class Evaluator:
    """Base class for black-box scoring functions.

    Subclasses implement :meth:`score`. ``batched=False`` makes callers
    feed one row at a time; ``max_batch`` splits large batches into chunks,
    which run on up to ``threads`` worker threads when the evaluator is
    ``thread_safe``. Chunks are reassembled in input order, so results do
    not depend on either setting.
    """

    batched: bool = True
    thread_safe: bool = True
    max_batch: Optional[int] = None
    threads: int = 1

    def score(self, X: np.ndarray, dims: tuple) -> np.ndarray:
        raise NotImplementedError

    def check_schema(self, x: FeatureInput) -> None:
        """Raise ``DimensionError`` if ``x`` cannot be scored by this model."""

    def __call__(self, X: np.ndarray, dims: tuple) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionError(f"expected a 2-D batch, got shape {X.shape}")
        if not self.batched:
            chunks = [X[i : i + 1] for i in range(X.shape[0])]
        elif self.max_batch and X.shape[0] > self.max_batch:
            chunks = [X[i : i + self.max_batch] for i in range(0, X.shape[0], self.max_batch)]
        else:
            chunks = [X]
        if len(chunks) > 1 and self.threads > 1 and self.thread_safe:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(lambda c: self._score_checked(c, dims), chunks))
        else:
            parts = [self._score_checked(c, dims) for c in chunks]
        return np.concatenate(parts) if parts else np.zeros(0)

    def _score_checked(self, X, dims):
        out = np.asarray(self.score(X, dims), dtype=np.float64).reshape(-1)
        if out.shape[0] != X.shape[0]:
            raise EvaluatorError(f"model returned {out.shape[0]} scores for {X.shape[0]} inputs")
        if np.isnan(out).any():
            raise EvaluatorError("model returned NaN")
        return out

    def evaluate(self, inputs: Sequence[FeatureInput]) -> np.ndarray:
        """Score a list of inputs sharing one feature layout."""
        if not inputs:
            return np.zeros(0)
        dims = inputs[0].dims
        for x in inputs:
            if x.dims != dims:
                raise DimensionError(
                    f"input {x.source_id!r} has dims {x.dims}, batch expects {dims}"
                )
        return self(np.stack([x.flat() for x in inputs]), dims)

    def score_one(self, x: FeatureInput) -> float:
        return float(self.evaluate([x])[0])

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class FunctionEvaluator(Evaluator):
    """Wrap a plain callable ``fn(X) -> scores`` over flat ``(B, D)`` batches."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], batched: bool = True):
        self.fn = fn
        self.batched = batched

    def score(self, X, dims):
        return self.fn(X)


class CountingEvaluator(Evaluator):
    """Delegates to ``inner`` and counts rows scored and batch calls made."""

    def __init__(self, inner: Evaluator):
        self.inner = inner
        self.batched = inner.batched
        self.n_evals = 0
        self.n_calls = 0

    def score(self, X, dims):
        self.n_calls += 1
        self.n_evals += X.shape[0]
        return self.inner(X, dims)

    def check_schema(self, x):
        self.inner.check_schema(x)

    def reset(self):
        self.n_evals = 0
        self.n_calls = 0


def feature_offsets(dims: tuple) -> np.ndarray:
    """Start column of each feature in a flat row, plus the total width."""
    return np.concatenate([[0], np.cumsum(dims)]).astype(int)
