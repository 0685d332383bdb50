"""DNA alphabet helpers and the position probability matrix type."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALPHABET = "ACGT"
UNKNOWN = "N"
PSEUDOCOUNT_FLOOR = 1e-3

_BASE_INDEX = {b: i for i, b in enumerate(ALPHABET)}


def floor_rows(m, floor: float = PSEUDOCOUNT_FLOOR) -> np.ndarray:
    """Clip every entry up to ``floor`` and renormalize each row to sum to 1."""
    m = np.maximum(np.asarray(m, dtype=np.float64), floor)
    return m / m.sum(axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Motif:
    """``n x 4`` right-stochastic matrix over ACGT, floored so all entries are > 0."""

    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] != 4 or m.shape[0] < 1:
            raise ValueError(f"motif matrix must have shape (n, 4), got {m.shape}")
        if np.any(m < 0):
            raise ValueError("motif probabilities must be non-negative")
        m = floor_rows(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __len__(self):
        return self.matrix.shape[0]

    def consensus(self) -> str:
        """Most probable base per row (lowest alphabet index on ties)."""
        return "".join(ALPHABET[j] for j in np.argmax(self.matrix, axis=1))

    @classmethod
    def near_deterministic(cls, consensus: str, p_major: float = 0.97, name: str = "") -> "Motif":
        """Motif whose row ``i`` puts ``p_major`` on ``consensus[i]``, the rest spread evenly."""
        rows = np.full((len(consensus), 4), (1.0 - p_major) / 3.0)
        for i, b in enumerate(consensus):
            rows[i, _BASE_INDEX[b]] = p_major
        return cls(rows, name)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "name": self.name}

    @classmethod
    def from_dict(cls, d) -> "Motif":
        if isinstance(d, dict):
            return cls(d["matrix"], d.get("name", ""))
        return cls(d)


def one_hot(seq: str) -> np.ndarray:
    """``(len(seq), 4)`` encoding; ``N`` maps to the uniform row."""
    out = np.zeros((len(seq), 4))
    for i, b in enumerate(seq.upper()):
        if b == UNKNOWN:
            out[i] = 0.25
        else:
            try:
                out[i, _BASE_INDEX[b]] = 1.0
            except KeyError:
                raise ValueError(f"unknown base {b!r} at position {i}") from None
    return out


def base_index(b: str) -> int:
    return _BASE_INDEX[b]
