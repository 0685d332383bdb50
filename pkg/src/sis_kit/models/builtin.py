"""Built-in analytic evaluators.

These double as demo models and as test oracles with closed-form SIS.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..motif import floor_rows
from ..types import DimensionError, FeatureInput
from .base import Evaluator, feature_offsets

LINKS = {
    "identity": lambda u: u,
    "logistic": expit,
}

ACTIVATIONS = {
    "identity": lambda u: u,
    "relu": lambda u: np.maximum(u, 0.0),
    "tanh": np.tanh,
    "logistic": expit,
}


def _lookup(table, name, what):
    try:
        return table[name]
    except KeyError:
        raise ValueError(f"unknown {what} {name!r}; expected one of {sorted(table)}") from None


def _check_width(x: FeatureInput, width: int, kind: str):
    if sum(x.dims) != width:
        raise DimensionError(
            f"{kind} expects {width} input values, input {x.source_id!r} has {sum(x.dims)}"
        )


class GLM(Evaluator):
    """``g(beta . x + beta0)`` on the flattened input."""

    def __init__(self, weights, intercept=0.0, link="identity"):
        self.weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        self.intercept = float(intercept)
        self.link = link
        self._g = _lookup(LINKS, link, "link")

    def linear_predictor(self, X):
        return X @ self.weights + self.intercept

    def score(self, X, dims):
        if X.shape[1] != self.weights.size:
            raise DimensionError(f"glm expects {self.weights.size} values, got {X.shape[1]}")
        return self._g(self.linear_predictor(X))

    def check_schema(self, x):
        _check_width(x, self.weights.size, "glm")


class PatternDistance(Evaluator):
    """``exp(-||x_S - c_S||)`` for scalar features ``S`` with target ``c_S``."""

    def __init__(self, support, center, link="exp"):
        self.support = np.asarray(support, dtype=int).reshape(-1)
        self.center = np.asarray(center, dtype=np.float64).reshape(-1)
        if self.support.size != self.center.size:
            raise DimensionError("pattern_distance: support and center differ in length")
        if link != "exp":
            raise ValueError(f"unknown link {link!r}; expected 'exp'")
        self.link = link

    def score(self, X, dims):
        if any(d != 1 for d in dims):
            raise DimensionError("pattern_distance needs scalar features")
        u = np.linalg.norm(X[:, self.support] - self.center, axis=1)
        return np.exp(-u)

    def check_schema(self, x):
        if any(d != 1 for d in x.dims):
            raise DimensionError("pattern_distance needs scalar features")
        if self.support.size and self.support.max() >= x.p:
            raise DimensionError(f"pattern support index {self.support.max()} out of range")


class SubfunctionCombination(Evaluator):
    """``max`` or ``min`` over inner models, each seeing only its own feature subset."""

    def __init__(self, subsets, inner, reduce="max"):
        if len(subsets) != len(inner) or not subsets:
            raise ValueError("need one inner model per subset, and at least one subset")
        self.subsets = [np.asarray(s, dtype=int).reshape(-1) for s in subsets]
        self.inner = list(inner)
        self.reduce = reduce
        self._op = {"max": np.max, "min": np.min}[reduce]

    def _columns(self, dims, subset):
        off = feature_offsets(dims)
        return np.concatenate([np.arange(off[i], off[i + 1]) for i in subset])

    def sub_scores(self, X, dims):
        """``(B, L)`` matrix of inner scores."""
        cols = []
        for subset, g in zip(self.subsets, self.inner):
            sub_dims = tuple(dims[i] for i in subset)
            cols.append(g(X[:, self._columns(dims, subset)], sub_dims))
        return np.stack(cols, axis=1)

    def score(self, X, dims):
        return self._op(self.sub_scores(X, dims), axis=1)

    def check_schema(self, x):
        for subset, g in zip(self.subsets, self.inner):
            if subset.size and subset.max() >= x.p:
                raise DimensionError(f"subset index {subset.max()} out of range for p={x.p}")
            sub = FeatureInput(tuple(x.features[i] for i in subset), x.source_id)
            g.check_schema(sub)


class MLP(Evaluator):
    """Dense feed-forward net on the flattened input; the last layer has one unit.

    ``layers`` holds ``{"weights": out x in (row-major), "bias": out, "activation": name}``
    applied in order.
    """

    def __init__(self, layers):
        self.layers = []
        for k, layer in enumerate(layers):
            W = np.asarray(layer["weights"], dtype=np.float64)
            if W.ndim != 2:
                raise DimensionError(f"layer {k}: weights must be a matrix")
            b = np.asarray(layer.get("bias", np.zeros(W.shape[0])), dtype=np.float64)
            if b.shape != (W.shape[0],):
                raise DimensionError(f"layer {k}: bias has shape {b.shape}, expected ({W.shape[0]},)")
            act = _lookup(ACTIVATIONS, layer.get("activation", "identity"), "activation")
            if self.layers and self.layers[-1][0].shape[0] != W.shape[1]:
                raise DimensionError(f"layer {k}: expects {W.shape[1]} inputs, previous layer gives {self.layers[-1][0].shape[0]}")
            self.layers.append((W, b, act))
        if not self.layers or self.layers[-1][0].shape[0] != 1:
            raise DimensionError("mlp must end in a single output unit")

    @property
    def input_width(self):
        return self.layers[0][0].shape[1]

    def score(self, X, dims):
        if X.shape[1] != self.input_width:
            raise DimensionError(f"mlp expects {self.input_width} values, got {X.shape[1]}")
        h = X
        for W, b, act in self.layers:
            h = act(h @ W.T + b)
        return h[:, 0]

    def check_schema(self, x):
        _check_width(x, self.input_width, "mlp")


class PWMScore(Evaluator):
    """Best-offset motif log-likelihood squashed through a logistic.

    ``logistic(scale * (max_o sum_i <x_{o+i}, log M_i> - bias))`` over one-hot
    (or soft, when masked) base vectors.
    """

    def __init__(self, matrix, scale=1.0, bias=0.0):
        self.log_m = np.log(floor_rows(matrix))
        if self.log_m.ndim != 2 or self.log_m.shape[1] != 4:
            raise DimensionError("pwm matrix must have shape (n, 4)")
        self.scale = float(scale)
        self.bias = float(bias)

    def offset_scores(self, X):
        """``(B, L - n + 1)`` log-likelihood at each motif offset."""
        n = self.log_m.shape[0]
        seq = X.reshape(X.shape[0], -1, 4)
        if seq.shape[1] < n:
            raise DimensionError(f"sequence of length {seq.shape[1]} shorter than motif ({n})")
        win = sliding_window_view(seq, n, axis=1)  # (B, L-n+1, 4, n)
        return np.einsum("bojn,nj->bo", win, self.log_m)

    def score(self, X, dims):
        if any(d != 4 for d in dims):
            raise DimensionError("pwm_score needs one-hot base features of dimension 4")
        best = self.offset_scores(X).max(axis=1)
        return expit(self.scale * (best - self.bias))

    def check_schema(self, x):
        if any(d != 4 for d in x.dims):
            raise DimensionError("pwm_score needs one-hot base features of dimension 4")
        if x.p < self.log_m.shape[0]:
            raise DimensionError(f"sequence of length {x.p} shorter than motif")


def load_mlp_layers(path) -> list:
    """Read layers from a JSON weight file: ``{"layers": [...]}`` in application order."""
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)["layers"]


def build_builtin(kind: str, params: dict, base_dir: Path | None = None) -> Evaluator:
    from .spec import EvaluatorSpec, build_evaluator

    if kind == "glm":
        return GLM(params["weights"], params.get("intercept", 0.0), params.get("link", "identity"))
    if kind == "pattern_distance":
        return PatternDistance(params["support"], params["center"], params.get("link", "exp"))
    if kind in ("max_of_subfunctions", "min_of_subfunctions"):
        inner = [build_evaluator(EvaluatorSpec.from_dict(s), base_dir) for s in params["inner"]]
        return SubfunctionCombination(params["subsets"], inner, kind[:3])
    if kind == "mlp":
        layers = params.get("layers")
        if layers is None:
            wf = Path(params["weights_file"])
            if base_dir is not None and not wf.is_absolute():
                wf = base_dir / wf
            layers = load_mlp_layers(wf)
        return MLP(layers)
    if kind == "pwm_score":
        return PWMScore(params["matrix"], params.get("scale", 1.0), params.get("bias", 0.0))
    raise ValueError(f"unknown evaluator kind {kind!r}")
