"""Rationale quality measures: motif divergence, QHS and summary reports."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np

from .baselines import feature_importance
from .models.base import Evaluator
from .motif import ALPHABET, PSEUDOCOUNT_FLOOR, UNKNOWN, Motif, base_index, floor_rows
from .sis import MaskedScorer
from .types import DecisionThreshold, FeatureInput, ImputationBaseline

__all__ = [
    "Motif",
    "rationale_string",
    "motif_alignment",
    "motif_divergence",
    "qhs",
    "rationale_report",
    "plot_rows_csv",
]


def rationale_string(indices: Iterable[int], x: FeatureInput) -> str:
    """Full-length string with the rationale's bases and ``N`` everywhere else."""
    if x.token_labels is None:
        raise ValueError(f"input {x.source_id!r} has no base labels")
    keep = set(int(i) for i in indices)
    return "".join(x.token_labels[i] if i in keep else UNKNOWN for i in range(x.p))


def _rationale_rows(seq: str) -> np.ndarray:
    """Per-position distributions: floored one-hot for bases, uniform for ``N``."""
    rows = np.full((len(seq), 4), 0.25)
    hot = np.zeros(4)
    for i, b in enumerate(seq):
        if b != UNKNOWN:
            hot[:] = 0.0
            hot[base_index(b)] = 1.0
            rows[i] = floor_rows(hot, PSEUDOCOUNT_FLOOR)
    return rows


def _pad(seq: str, full_len: int) -> str:
    seq = seq.upper()
    if len(seq) > full_len:
        raise ValueError(f"rationale of length {len(seq)} exceeds full length {full_len}")
    for i, b in enumerate(seq):
        if b != UNKNOWN and b not in ALPHABET:
            raise ValueError(f"unknown base {b!r} at position {i}")
    return seq + UNKNOWN * (full_len - len(seq))


def motif_alignment(rationale_seq: str, motif: Motif, full_len: int) -> int:
    """Offset of the motif maximizing the likelihood of the rationale's known bases.

    Known bases outside the motif span are scored under the uniform
    distribution. Ties go to the smallest offset.
    """
    seq = _pad(rationale_seq, full_len)
    n = len(motif)
    if n > full_len:
        raise ValueError(f"motif of length {n} longer than the sequence ({full_len})")
    logm = np.log(motif.matrix)
    known = [(i, base_index(b)) for i, b in enumerate(seq) if b != UNKNOWN]
    best_o, best_ll = 0, -np.inf
    for o in range(full_len - n + 1):
        ll = 0.0
        for i, j in known:
            ll += logm[i - o, j] if o <= i < o + n else np.log(0.25)
        if ll > best_ll:
            best_o, best_ll = o, ll
    return best_o


def motif_divergence(rationale_seq: str, motif: Motif, full_len: int) -> float:
    """``sum_i KL(R_i || M_i)`` between the padded rationale and the aligned, uniform-padded motif."""
    seq = _pad(rationale_seq, full_len)
    o = motif_alignment(seq, motif, full_len)
    M = np.full((full_len, 4), 0.25)
    M[o : o + len(motif)] = motif.matrix
    R = _rationale_rows(seq)
    return float(np.sum(R * (np.log(R) - np.log(M))))


def qhs(
    model: Evaluator,
    x: FeatureInput,
    S_human: Iterable[int],
    baseline: ImputationBaseline,
    direction: str = "above",
) -> float:
    """``f(x_S) - f(x)`` for a human-selected subset ``S``."""
    scorer = MaskedScorer(model, x, baseline, DecisionThreshold(0.0, direction).sign)
    f = scorer.scores(np.stack([scorer.mask_of(S_human), np.ones(x.p, dtype=bool)]))
    return float(f[0] - f[1])


def _stats(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return {"n": 0}
    return {
        "n": int(v.size),
        "median": float(np.median(v)),
        "mean": float(v.mean()),
        "min": float(v.min()),
        "max": float(v.max()),
    }


def rationale_report(
    entries: Sequence,
    model: Evaluator | None = None,
    baseline: ImputationBaseline | None = None,
    direction: str = "above",
) -> dict:
    """Per-method summary of rationale lengths, scores and feature importances.

    ``entries`` holds ``(Rationale, FeatureInput)`` pairs. Lengths are a
    percentage of each input's feature count, aggregated by median and max.
    When a model is given, the marginal importance of every feature
    (``f(x) - f(x without i)``) is split by whether the feature is in the
    rationale.
    """
    if not entries:
        return {}
    by_method = defaultdict(list)
    for r, x in entries:
        by_method[r.method_tag].append((r, x))
    importance_cache: dict = {}
    report = {}
    for method in sorted(by_method):
        rows = by_method[method]
        pct = [100.0 * len(r.indices) / x.p for r, x in rows]
        lengths = [len(r.indices) for r, _ in rows]
        scores = [r.achieved_score for r, _ in rows]
        summary = {
            "n_rationales": len(rows),
            "length_pct": {"median": float(np.median(pct)), "max": float(np.max(pct))},
            "length": {"median": float(np.median(lengths)), "max": int(np.max(lengths))},
            "achieved_score": _stats(scores),
            "fraction_sufficient": float(np.mean([r.sufficiency_met for r, _ in rows])),
        }
        if model is not None and baseline is not None:
            inside, outside = [], []
            for r, x in rows:
                key = id(x)
                if key not in importance_cache:
                    importance_cache[key] = feature_importance(model, x, baseline, direction)
                imp = importance_cache[key]
                sel = np.zeros(x.p, dtype=bool)
                sel[list(r.indices)] = True
                inside.extend(imp[sel].tolist())
                outside.extend(imp[~sel].tolist())
            summary["marginal_importance"] = {
                "rationale": _stats(inside),
                "other": _stats(outside),
            }
        report[method] = summary
    return report


def plot_rows(entries: Sequence) -> list:
    """``(method, input_ref, length_pct, achieved_score)`` rows for length-vs-score plots."""
    return [
        (r.method_tag, r.input_ref or x.source_id, 100.0 * len(r.indices) / x.p, r.achieved_score)
        for r, x in entries
    ]


def plot_rows_csv(entries: Sequence) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "input_ref", "length_pct", "achieved_score"])
    for method, ref, pct, score in plot_rows(entries):
        w.writerow([method, ref, repr(pct), repr(score)])
    return buf.getvalue()
