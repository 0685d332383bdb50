"""Closed-form SIS collections for model families with known answers.

Each oracle checks its side conditions first and returns ``None`` when
they do not hold. When they do, it returns the expected list of SIS as
frozensets, in the order SIScollection should find them.

The oracles reason about the model structure directly. They only call the
model to evaluate specific subsets, never to search.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..types import DecisionThreshold, FeatureInput, ImputationBaseline, materialize
from .builtin import GLM, PatternDistance, SubfunctionCombination
from .spec import EvaluatorSpec, build_evaluator

# prefix sums closer than this to the decision boundary are numerically ambiguous
MARGIN = 1e-9


def analytic_sis_oracle(
    spec: EvaluatorSpec,
    x: FeatureInput,
    tau,
    baseline: ImputationBaseline,
) -> Optional[list]:
    thr = DecisionThreshold.coerce(tau)
    if thr.direction != "above":
        return None
    if spec.kind == "glm":
        return _glm_oracle(build_evaluator(spec), x, thr.tau, baseline)
    if spec.kind in ("max_of_subfunctions", "min_of_subfunctions"):
        return _combination_oracle(build_evaluator(spec), x, thr.tau, baseline)
    if spec.kind == "pattern_distance":
        return _pattern_oracle(build_evaluator(spec), x, thr.tau, baseline)
    return None


def _scalar_vectors(x, baseline):
    if any(d != 1 for d in x.dims):
        return None
    return x.flat(), baseline.flat_for(x)


def _link_inverse(link: str, tau: float) -> Optional[float]:
    if link == "identity":
        return tau
    if link == "logistic":
        if not 0.0 < tau < 1.0:
            return None
        return float(np.log(tau) - np.log1p(-tau))
    return None


def _glm_oracle(model: GLM, x, tau, baseline):
    """Generalized linear model on centered data.

    Conditions: scalar features, zero baseline, ``tau > g(beta0)``, distinct
    contributions ``beta_i x_i``, and no prefix sum of sorted contributions
    within ``MARGIN`` of the boundary ``g^-1(tau)``. Then each SIS is the
    shortest run of largest remaining contributions that reaches the
    boundary, repeated until the leftover contributions fall short.
    """
    vecs = _scalar_vectors(x, baseline)
    if vecs is None or model.weights.size != x.p:
        return None
    xv, zv = vecs
    if np.any(zv != 0.0):
        return None
    t = _link_inverse(model.link, tau)
    if t is None or not model.intercept < t:
        return None
    c = model.weights * xv
    if len(np.unique(c)) != c.size:
        return None
    remaining = list(np.argsort(-c, kind="stable"))
    out = []
    while remaining:
        vals = c[remaining]
        total = model.intercept + vals.sum()
        if abs(total - t) < MARGIN:
            return None
        if total < t:
            break
        prefix = model.intercept + np.cumsum(vals)
        if np.any(np.abs(prefix - t) < MARGIN):
            return None
        ell = int(np.argmax(prefix >= t)) + 1
        out.append(frozenset(int(i) for i in remaining[:ell]))
        remaining = remaining[ell:]
    return out


def _combination_oracle(model: SubfunctionCombination, x, tau, baseline):
    """``max`` / ``min`` over GLMs on disjoint subsets.

    Conditions: disjoint subsets; every inner model a GLM with increasing
    link whose contributions ``beta_i (x_i - z_i)`` are all positive (so
    masking never raises an inner score); inner scores on ``x`` pairwise
    distinct and all ``>= tau``; every inner score drops below ``tau`` when
    any one of its features is masked. Then ``max`` yields the subsets in
    decreasing order of inner score and ``min`` yields their union.
    """
    vecs = _scalar_vectors(x, baseline)
    if vecs is None:
        return None
    xv, zv = vecs
    seen = set()
    for s in model.subsets:
        if s.size == 0 or seen & set(s.tolist()) or s.max() >= x.p:
            return None
        seen |= set(s.tolist())
    g_full = []
    for s, g in zip(model.subsets, model.inner):
        if not isinstance(g, GLM) or g.weights.size != s.size or g.link not in ("identity", "logistic"):
            return None
        if np.any(g.weights * (xv[s] - zv[s]) <= 0):
            return None
        dims = (1,) * s.size
        full = float(g(xv[s][None], dims)[0])
        drop = np.repeat(xv[s][None], s.size, axis=0)
        drop[np.arange(s.size), np.arange(s.size)] = zv[s]
        if full < tau or np.any(g(drop, dims) >= tau):
            return None
        g_full.append(full)
    if len(set(g_full)) != len(g_full):
        return None
    order = np.argsort(-np.asarray(g_full), kind="stable")
    subsets = [frozenset(int(i) for i in model.subsets[k]) for k in order]
    if model.reduce == "max":
        return subsets
    return [frozenset().union(*subsets)]


def _pattern_oracle(model: PatternDistance, x, tau, baseline):
    """Distance-to-pattern model with ``tau = f(x)``.

    Conditions: scalar features, ``tau`` equal to the model score on ``x``,
    no pattern feature whose observed value is farther from the target
    than its mask value, and masking any closer feature must lower the
    score in floating point. The single SIS is the set of closer features.
    """
    vecs = _scalar_vectors(x, baseline)
    if vecs is None:
        return None
    xv, zv = vecs
    fx = model.score_one(x)
    if tau != fx:
        return None
    s, cen = model.support, model.center
    dx = np.abs(xv[s] - cen)
    dz = np.abs(zv[s] - cen)
    if np.any(dx > dz):
        return None
    closer = [int(i) for i in s[dx < dz]]
    if not closer:
        return None
    for i in closer:
        keep = [j for j in range(x.p) if j != i]
        if model.score_one(materialize(x, keep, baseline)) >= fx:
            return None
    return [frozenset(closer)]
