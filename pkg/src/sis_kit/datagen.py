"""Seeded synthetic datasets.

Randomness comes from ``numpy.random.Generator(PCG64(seed))``, whose
output stream is fixed across platforms for a given integer seed. Draw
order is part of the contract and documented per generator; changing it
changes every dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models.spec import EvaluatorSpec
from .motif import ALPHABET, Motif, one_hot
from .types import FeatureInput


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass
class PlantLabel:
    source_id: str
    planted: bool
    offset: int | None
    sequence: str

    def to_dict(self):
        return {"source_id": self.source_id, "planted": self.planted, "offset": self.offset, "sequence": self.sequence}


def gen_planted_motif(n: int, seq_len: int, motif: Motif, plant_rate: float, seed: int):
    """Uniform random DNA with a motif sample planted in some sequences.

    Per sequence, in order: ``seq_len`` uniform bases via
    ``integers(0, 4, seq_len)``; one ``random()`` compared against
    ``plant_rate``; if planted, an offset via ``integers(0, seq_len - m + 1)``
    and ``m`` uniforms, each row's base chosen by inverse CDF on that row of
    the motif.

    Returns ``(dataset, labels)``; inputs are one-hot with base letters as
    token labels.
    """
    m = len(motif)
    if n < 0 or seq_len < 1:
        raise ValueError("n must be >= 0 and seq_len >= 1")
    if m > seq_len:
        raise ValueError(f"motif length {m} exceeds seq_len {seq_len}")
    if not 0.0 <= plant_rate <= 1.0:
        raise ValueError(f"plant_rate must be in [0, 1], got {plant_rate}")
    rng = _rng(seed)
    cdf = np.cumsum(motif.matrix, axis=1)
    dataset, labels = [], []
    width = len(str(max(n - 1, 0)))
    for k in range(n):
        bases = rng.integers(0, 4, seq_len)
        planted = bool(rng.random() < plant_rate)
        offset = None
        if planted:
            offset = int(rng.integers(0, seq_len - m + 1))
            u = rng.random(m)
            rows = np.minimum((u[:, None] > cdf).sum(axis=1), 3)
            bases[offset : offset + m] = rows
        seq = "".join(ALPHABET[b] for b in bases)
        sid = f"seq{k:0{width}d}"
        dataset.append(FeatureInput.from_array(one_hot(seq), sid, tuple(seq)))
        labels.append(PlantLabel(sid, planted, offset, seq))
    return dataset, labels


WEIGHT_LAWS = ("normal", "uniform", "laplace")


def gen_glm_instances(p: int, n: int, weight_law: str = "normal", seed: int = 0, link: str = "logistic", intercept: float = 0.0):
    """Standard-normal scalar features with a matching GLM spec.

    Draw order: ``p`` weights (``normal``: standard normal; ``uniform``:
    U(-1, 1); ``laplace``: Laplace(0, 1)), then an ``(n, p)`` block of
    standard normal features, row by row. Features have population mean
    zero, so a zero baseline is the (population) mean baseline.
    """
    if p < 1 or n < 1:
        raise ValueError("p and n must be >= 1")
    rng = _rng(seed)
    if weight_law == "normal":
        beta = rng.standard_normal(p)
    elif weight_law == "uniform":
        beta = rng.uniform(-1.0, 1.0, p)
    elif weight_law == "laplace":
        beta = rng.laplace(0.0, 1.0, p)
    else:
        raise ValueError(f"unknown weight law {weight_law!r}; expected one of {WEIGHT_LAWS}")
    X = rng.standard_normal((n, p))
    width = len(str(n - 1))
    dataset = [FeatureInput.from_array(row, f"x{k:0{width}d}") for k, row in enumerate(X)]
    spec = EvaluatorSpec("glm", {"weights": beta.tolist(), "intercept": float(intercept), "link": link})
    return dataset, spec


def pwm_spec(motif: Motif, scale: float, bias: float) -> EvaluatorSpec:
    return EvaluatorSpec("pwm_score", {"matrix": motif.matrix.tolist(), "scale": float(scale), "bias": float(bias)})
