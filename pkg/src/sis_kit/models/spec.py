from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


from ..types import FeatureInput
from .base import Evaluator

KINDS = (
    "glm",
    "max_of_subfunctions",
    "min_of_subfunctions",
    "pattern_distance",
    "mlp",
    "pwm_score",
    "external",
)


@dataclass(frozen=True)
class EvaluatorSpec:
    """Model description: a ``kind`` plus its kind-specific ``parameters`` payload."""

    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown evaluator kind {self.kind!r}; expected one of {KINDS}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "parameters": self.parameters}

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluatorSpec":
        return cls(d["kind"], dict(d.get("parameters", {})))


def load_spec(path) -> EvaluatorSpec:
    with open(path, encoding="utf-8") as fh:
        return EvaluatorSpec.from_dict(json.load(fh))


def build_evaluator(spec: EvaluatorSpec, base_dir: Path | None = None) -> Evaluator:
    """Instantiate ``spec``. Relative file paths inside it resolve against ``base_dir``."""
    if spec.kind == "external":
        from .external import ExternalEvaluator

        return ExternalEvaluator.from_parameters(spec.parameters, base_dir)
    from .builtin import build_builtin

    return build_builtin(spec.kind, spec.parameters, base_dir)


def load_evaluator(path) -> Evaluator:
    path = Path(path)
    return build_evaluator(load_spec(path), path.parent)


def evaluate(spec: EvaluatorSpec, batch: Sequence[FeatureInput]) -> list:
    """Score ``batch`` with a freshly built evaluator; output order matches input order."""
    with build_evaluator(spec) as model:
        for x in batch:
            model.check_schema(x)
        return [float(v) for v in model.evaluate(list(batch))]
