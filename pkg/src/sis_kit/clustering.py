"""DBSCAN over SIS populations with pluggable pairwise distances."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .models.base import Evaluator
from .sis import MaskedScorer
from .types import DecisionThreshold, FeatureInput, ImputationBaseline, SufficientInputSubset

NOISE = -1
GAP = "-"


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost edit distance (insert, delete, substitute)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def jaccard(a, b) -> float:
    """``1 - |A & B| / |A | B|`` over the distinct tokens; two empty bags are at distance 0."""
    A, B = set(a), set(b)
    union = A | B
    if not union:
        return 0.0
    return 1.0 - len(A & B) / len(union)


def energy_distance(X1, X2) -> float:
    """Energy distance between uniform distributions on two finite point sets.

    Within-set expectations include the zero self-pairs.
    """
    X1 = np.asarray(X1, dtype=np.float64)
    X2 = np.asarray(X2, dtype=np.float64)
    if X1.ndim == 1:
        X1 = X1[:, None]
    if X2.ndim == 1:
        X2 = X2[:, None]
    if len(X1) == 0 or len(X2) == 0:
        raise ValueError("energy distance needs two nonempty point sets")

    def mean_dist(A, B):
        return np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1).mean()

    return float(2.0 * mean_dist(X1, X2) - mean_dist(X1, X1) - mean_dist(X2, X2))


METRICS: dict = {
    "levenshtein": levenshtein,
    "jaccard": jaccard,
    "energy": energy_distance,
}


def pairwise_distances(items: Sequence, metric: Callable) -> np.ndarray:
    n = len(items)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = metric(items[i], items[j])
    return D


def dbscan_labels(D: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """DBSCAN labels from a precomputed distance matrix.

    Neighbourhoods are ``d <= eps`` and include the point itself. Clusters
    are numbered in order of their smallest member. A border point next to
    several clusters joins the cluster of its lowest-indexed core neighbour.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if n == 0:
        raise ValueError("cannot cluster an empty population")
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    adj = D <= eps
    core = adj.sum(axis=1) >= min_pts
    labels = np.full(n, NOISE)
    next_label = 0
    for start in range(n):
        if not core[start] or labels[start] != NOISE:
            continue
        labels[start] = next_label
        stack = [start]
        while stack:
            q = stack.pop()
            for r in np.flatnonzero(adj[q] & core):
                if labels[r] == NOISE:
                    labels[r] = next_label
                    stack.append(r)
        next_label += 1
    for i in np.flatnonzero(~core):
        nb = np.flatnonzero(adj[i] & core)
        if nb.size:
            labels[i] = labels[nb[0]]
    return _canonical(labels)


def _canonical(labels: np.ndarray) -> np.ndarray:
    # relabel clusters in order of first appearance
    mapping = {}
    out = labels.copy()
    for i, l in enumerate(labels):
        if l == NOISE:
            continue
        if l not in mapping:
            mapping[l] = len(mapping)
        out[i] = mapping[l]
    return out


@dataclass
class PopulationItem:
    sis: SufficientInputSubset
    source_model_tag: str
    rendering: object
    input_ref: str = ""


@dataclass
class SisPopulation:
    """SIS from one or more models, all rendered for the same metric."""

    items: list
    rendering_kind: str

    def __post_init__(self):
        if self.rendering_kind not in METRICS:
            raise ValueError(f"unknown rendering kind {self.rendering_kind!r}")

    def __len__(self):
        return len(self.items)


@dataclass
class ClusterReport:
    assignments: list
    clusters: list
    parameters: dict

    def to_dict(self) -> dict:
        return {"assignments": self.assignments, "clusters": self.clusters, "parameters": self.parameters}


def render_sequence(sis: SufficientInputSubset, x: FeatureInput) -> str:
    """Symbols from the SIS span, with one gap symbol per run of masked positions."""
    if x.token_labels is None:
        raise ValueError(f"input {x.source_id!r} has no token labels to render")
    keep = sorted(sis.indices)
    out = [x.token_labels[keep[0]]]
    for prev, cur in zip(keep, keep[1:]):
        if cur > prev + 1:
            out.append(GAP)
        out.append(x.token_labels[cur])
    return "".join(out)


def render_tokens(sis: SufficientInputSubset, x: FeatureInput) -> tuple:
    """The SIS as a bag of token labels (sorted, so equal bags compare equal)."""
    if x.token_labels is None:
        raise ValueError(f"input {x.source_id!r} has no token labels to render")
    return tuple(sorted(x.token_labels[i] for i in sis.indices))


def render_coordinates(sis: SufficientInputSubset, width: int) -> tuple:
    """Row-major feature indices as ``(row, col)`` pixel coordinates."""
    return tuple(sorted(divmod(i, width) for i in sis.indices))


def render(sis: SufficientInputSubset, x: FeatureInput, kind: str, grid_width: int | None = None):
    if kind == "levenshtein":
        return render_sequence(sis, x)
    if kind == "jaccard":
        return render_tokens(sis, x)
    if kind == "energy":
        if grid_width is None:
            raise ValueError("energy rendering needs a grid width")
        return render_coordinates(sis, grid_width)
    raise ValueError(f"unknown rendering kind {kind!r}")


def _display(rendering) -> str:
    if isinstance(rendering, str):
        return rendering
    if rendering and isinstance(rendering[0], tuple):
        return " ".join(f"{r},{c}" for r, c in rendering)
    return " ".join(rendering)


def dbscan(population: SisPopulation, eps: float, min_pts: int, n_exemplars: int = 5) -> ClusterReport:
    """Cluster a population and summarize each cluster.

    Each cluster lists its most frequent renderings (ties in order of first
    appearance) and the percentage of members contributed by each source.
    """
    if len(population) == 0:
        raise ValueError("cannot cluster an empty population")
    metric = METRICS[population.rendering_kind]
    D = pairwise_distances([it.rendering for it in population.items], metric)
    labels = dbscan_labels(D, eps, min_pts)
    sources = sorted({it.source_model_tag for it in population.items})
    clusters = []
    for cid in range(int(labels.max()) + 1 if (labels >= 0).any() else 0):
        members = [it for it, l in zip(population.items, labels) if l == cid]
        counts = Counter(_display(it.rendering) for it in members)
        first_seen = {}
        for it in members:
            first_seen.setdefault(_display(it.rendering), len(first_seen))
        top = sorted(counts.items(), key=lambda kv: (-kv[1], first_seen[kv[0]]))[:n_exemplars]
        by_src = Counter(it.source_model_tag for it in members)
        clusters.append(
            {
                "id": cid,
                "size": len(members),
                "top_exemplars": [{"rendering": r, "frequency": c} for r, c in top],
                "composition": {s: 100.0 * by_src[s] / len(members) for s in sources},
            }
        )
    return ClusterReport(
        [int(l) for l in labels],
        clusters,
        {"eps": float(eps), "min_pts": int(min_pts), "metric": population.rendering_kind},
    )


@dataclass
class CrossModelPrediction:
    fraction_sufficient: float
    scores: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"fraction_sufficient": self.fraction_sufficient, "scores": self.scores}


def cross_model_predict(
    pairs: Sequence,
    other_model: Evaluator,
    baseline: ImputationBaseline,
    tau,
) -> CrossModelPrediction:
    """Score each SIS (kept features only) with ``other_model``.

    ``pairs`` holds ``(FeatureInput, SufficientInputSubset)``. Scores are
    oriented like the threshold.
    """
    thr = DecisionThreshold.coerce(tau)
    scores = []
    for x, sis in pairs:
        other_model.check_schema(x)
        scores.append(MaskedScorer(other_model, x, baseline, thr.sign).score_set(sis.indices))
    if not scores:
        return CrossModelPrediction(float("nan"), [])
    frac = float(np.mean([s >= thr.oriented_tau for s in scores]))
    return CrossModelPrediction(frac, scores)
