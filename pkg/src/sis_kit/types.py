"""Domain types shared across the toolkit.

Feature indices are 0-based everywhere in code and in serialized files
(files carry an explicit ``index_base`` marker where indices appear).
Human-readable reports convert to 1-based on output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Optional

import numpy as np


class DimensionError(ValueError):
    """Raised when feature dimensions disagree with a schema or model."""


class DecisionCriterionError(ValueError):
    """Raised when an input does not meet the decision being explained."""


def _frozen_vector(v: Any) -> np.ndarray:
    arr = np.array(v, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureInput:
    """An indexable list of feature vectors ``[x_1, ..., x_p]``.

    Each feature is a 1-D float vector; dimensions may differ between
    features. Vectors are stored read-only.
    """

    features: tuple
    source_id: str = ""
    token_labels: Optional[tuple] = None

    def __post_init__(self):
        feats = tuple(_frozen_vector(f) for f in self.features)
        if not feats:
            raise DimensionError("FeatureInput needs at least one feature")
        for i, f in enumerate(feats):
            if f.size < 1:
                raise DimensionError(f"feature {i} has dimension 0")
        object.__setattr__(self, "features", feats)
        if self.token_labels is not None:
            labels = tuple(str(t) for t in self.token_labels)
            if len(labels) != len(feats):
                raise DimensionError(
                    f"token_labels has length {len(labels)}, expected {len(feats)}"
                )
            object.__setattr__(self, "token_labels", labels)

    @classmethod
    def from_array(cls, values, source_id: str = "", token_labels=None) -> "FeatureInput":
        """Build from a 1-D array (scalar features) or a 2-D ``(p, d)`` array."""
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        return cls(tuple(arr), source_id, token_labels)

    @property
    def p(self) -> int:
        return len(self.features)

    @property
    def dims(self) -> tuple:
        return tuple(f.size for f in self.features)

    def flat(self) -> np.ndarray:
        """All feature vectors concatenated into one 1-D array."""
        return np.concatenate(self.features)

    def __eq__(self, other):
        if not isinstance(other, FeatureInput):
            return NotImplemented
        return (
            self.source_id == other.source_id
            and self.token_labels == other.token_labels
            and self.dims == other.dims
            and all(np.array_equal(a, b) for a, b in zip(self.features, other.features))
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "features": [f.tolist() for f in self.features],
            "source_id": self.source_id,
            "token_labels": None if self.token_labels is None else list(self.token_labels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureInput":
        return cls(tuple(d["features"]), d.get("source_id", ""), d.get("token_labels"))


@dataclass(frozen=True, eq=False)
class ImputationBaseline:
    """Per-feature mask vectors ``z_i``.

    With ``shared=True`` a single mask vector stands in for every position,
    which is how variable-length inputs (text) are masked.
    """

    mask_vectors: tuple
    schema_id: str = ""
    shared: bool = False

    def __post_init__(self):
        vecs = tuple(_frozen_vector(v) for v in self.mask_vectors)
        if not vecs:
            raise DimensionError("baseline needs at least one mask vector")
        if self.shared and len(vecs) != 1:
            raise DimensionError("a shared baseline holds exactly one mask vector")
        object.__setattr__(self, "mask_vectors", vecs)

    @classmethod
    def zeros_like(cls, x: FeatureInput, schema_id: str = "zero") -> "ImputationBaseline":
        return cls(tuple(np.zeros(d) for d in x.dims), schema_id)

    def vector_for(self, i: int) -> np.ndarray:
        if self.shared:
            return self.mask_vectors[0]
        return self.mask_vectors[i]

    def check_compatible(self, x: FeatureInput) -> None:
        if not self.shared and len(self.mask_vectors) != x.p:
            raise DimensionError(
                f"baseline has {len(self.mask_vectors)} mask vectors, input has {x.p} features"
            )
        for i, d in enumerate(x.dims):
            zd = self.vector_for(i).size
            if zd != d:
                raise DimensionError(f"feature {i}: input dimension {d}, mask dimension {zd}")

    def flat_for(self, x: FeatureInput) -> np.ndarray:
        """Mask vectors laid out to match ``x.flat()``."""
        self.check_compatible(x)
        if self.shared:
            return np.tile(self.mask_vectors[0], x.p)
        return np.concatenate(self.mask_vectors)

    def __eq__(self, other):
        if not isinstance(other, ImputationBaseline):
            return NotImplemented
        return (
            self.schema_id == other.schema_id
            and self.shared == other.shared
            and len(self.mask_vectors) == len(other.mask_vectors)
            and all(np.array_equal(a, b) for a, b in zip(self.mask_vectors, other.mask_vectors))
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "mask_vectors": [v.tolist() for v in self.mask_vectors],
            "schema_id": self.schema_id,
            "shared": self.shared,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImputationBaseline":
        return cls(tuple(d["mask_vectors"]), d.get("schema_id", ""), bool(d.get("shared", False)))


@dataclass(frozen=True)
class MaskedInput:
    base: FeatureInput
    unmasked_set: tuple

    def __post_init__(self):
        s = tuple(int(i) for i in self.unmasked_set)
        for i in s:
            if not 0 <= i < self.base.p:
                raise IndexError(f"feature index {i} out of range for p={self.base.p}")
        object.__setattr__(self, "unmasked_set", s)

    def materialize(self, baseline: ImputationBaseline) -> FeatureInput:
        return materialize(self.base, self.unmasked_set, baseline)

    def to_dict(self) -> dict:
        return {"base": self.base.to_dict(), "unmasked_set": list(self.unmasked_set)}

    @classmethod
    def from_dict(cls, d: dict) -> "MaskedInput":
        return cls(FeatureInput.from_dict(d["base"]), tuple(d["unmasked_set"]))


def materialize(base: FeatureInput, S: Iterable[int], baseline: ImputationBaseline) -> FeatureInput:
    """Return ``x_S``: ``base`` on the features in ``S``, mask vectors elsewhere."""
    baseline.check_compatible(base)
    keep = set()
    for i in S:
        i = int(i)
        if not 0 <= i < base.p:
            raise IndexError(f"feature index {i} out of range for p={base.p}")
        keep.add(i)
    feats = tuple(
        base.features[i] if i in keep else baseline.vector_for(i) for i in range(base.p)
    )
    return FeatureInput(feats, base.source_id, base.token_labels)


@dataclass(frozen=True)
class DecisionThreshold:
    """Decision ``score >= tau`` (``above``) or ``score <= tau`` (``below``).

    ``below`` is reduced to ``above`` by negating scores and threshold, so
    every algorithm only ever checks ``oriented_score >= oriented_tau``.
    """

    tau: float
    direction: str = "above"

    def __post_init__(self):
        if self.direction not in ("above", "below"):
            raise ValueError(f"direction must be 'above' or 'below', got {self.direction!r}")
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == "above" else -1.0

    @property
    def oriented_tau(self) -> float:
        return self.sign * self.tau

    def met(self, raw_score: float) -> bool:
        return self.sign * raw_score >= self.oriented_tau

    def to_dict(self) -> dict:
        return {"tau": self.tau, "direction": self.direction}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionThreshold":
        return cls(d["tau"], d.get("direction", "above"))

    @classmethod
    def coerce(cls, tau) -> "DecisionThreshold":
        return tau if isinstance(tau, cls) else cls(float(tau))


@dataclass(frozen=True)
class SufficientInputSubset:
    """One SIS.

    ``indices`` lists features in the order FindSIS popped them (last
    removed by backward selection first). ``rank_weights[j]`` is the
    position of ``indices[j]`` in the removal ordering, so larger ordinals
    mean the feature survived longer.
    """

    indices: tuple
    achieved_score: float
    rank_weights: Optional[tuple] = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ValueError("a SIS cannot be empty")
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate indices in SIS: {idx}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "achieved_score", float(self.achieved_score))
        if self.rank_weights is not None:
            rw = tuple(int(r) for r in self.rank_weights)
            if len(rw) != len(idx):
                raise ValueError("rank_weights must align with indices")
            object.__setattr__(self, "rank_weights", rw)

    def __len__(self):
        return len(self.indices)

    def as_set(self) -> frozenset:
        return frozenset(self.indices)

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "achieved_score": self.achieved_score,
            "rank_weights": None if self.rank_weights is None else list(self.rank_weights),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SufficientInputSubset":
        return cls(tuple(d["indices"]), d["achieved_score"], d.get("rank_weights"))


@dataclass(frozen=True)
class BackSelectTrace:
    """Backward-selection record.

    ``removal_order[0]`` was removed first; ``score_history[t]`` is the score
    of the remaining set after removal ``t``.
    """

    removal_order: tuple
    score_history: tuple

    def __post_init__(self):
        ro = tuple(int(i) for i in self.removal_order)
        sh = tuple(float(s) for s in self.score_history)
        if len(ro) != len(sh):
            raise ValueError("removal_order and score_history differ in length")
        object.__setattr__(self, "removal_order", ro)
        object.__setattr__(self, "score_history", sh)

    def to_dict(self) -> dict:
        return {"removal_order": list(self.removal_order), "score_history": list(self.score_history)}

    @classmethod
    def from_dict(cls, d: dict) -> "BackSelectTrace":
        return cls(tuple(d["removal_order"]), tuple(d["score_history"]))


@dataclass(frozen=True)
class SisCollectionResult:
    """Disjoint SIS found for one input plus the audit trail.

    Scores are oriented (negated for ``direction="below"``) so that the
    recorded values always compare against ``threshold.oriented_tau``.
    """

    input_ref: str
    sis_list: tuple
    residual_score: float
    trace: tuple = ()
    threshold: Optional[DecisionThreshold] = None
    full_score: Optional[float] = None
    default_decision: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sis_list", tuple(self.sis_list))
        object.__setattr__(self, "trace", tuple(self.trace))
        object.__setattr__(self, "residual_score", float(self.residual_score))

    def union(self) -> frozenset:
        out: set = set()
        for s in self.sis_list:
            out.update(s.indices)
        return frozenset(out)

    def to_dict(self) -> dict:
        return {
            "input_ref": self.input_ref,
            "sis_list": [s.to_dict() for s in self.sis_list],
            "residual_score": self.residual_score,
            "trace": [t.to_dict() for t in self.trace],
            "threshold": None if self.threshold is None else self.threshold.to_dict(),
            "full_score": self.full_score,
            "default_decision": self.default_decision,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SisCollectionResult":
        thr = d.get("threshold")
        return cls(
            d["input_ref"],
            tuple(SufficientInputSubset.from_dict(s) for s in d["sis_list"]),
            d["residual_score"],
            tuple(BackSelectTrace.from_dict(t) for t in d.get("trace", ())),
            None if thr is None else DecisionThreshold.from_dict(thr),
            d.get("full_score"),
            bool(d.get("default_decision", False)),
        )


METHOD_TAGS = (
    "sis",
    "suff_perturb",
    "perturb_len",
    "suff_attrib",
    "attrib_len",
    "top_attrib",
    "human",
)


@dataclass(frozen=True)
class Rationale:
    method_tag: str
    indices: tuple
    achieved_score: float
    sufficiency_met: bool
    input_ref: str = ""
    budget_reached: Optional[bool] = None

    def __post_init__(self):
        if self.method_tag not in METHOD_TAGS:
            raise ValueError(f"unknown method_tag {self.method_tag!r}")
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "achieved_score", float(self.achieved_score))

    def to_dict(self) -> dict:
        return {
            "method_tag": self.method_tag,
            "indices": list(self.indices),
            "achieved_score": self.achieved_score,
            "sufficiency_met": self.sufficiency_met,
            "input_ref": self.input_ref,
            "budget_reached": self.budget_reached,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Rationale":
        return cls(
            d["method_tag"],
            tuple(d["indices"]),
            d["achieved_score"],
            bool(d["sufficiency_met"]),
            d.get("input_ref", ""),
            d.get("budget_reached"),
        )


def sis_rationales(result: SisCollectionResult) -> list:
    """Each SIS of a collection as a ``Rationale`` tagged ``sis``."""
    return [
        Rationale("sis", s.indices, s.achieved_score, True, result.input_ref)
        for s in result.sis_list
    ]

