"""Black-box evaluators: built-in analytic models and the subprocess bridge."""

from .base import CountingEvaluator, Evaluator, EvaluatorError, FunctionEvaluator
from .builtin import GLM, MLP, PatternDistance, PWMScore, SubfunctionCombination
from .external import ExternalEvaluator, ExternalModelError
from .oracle import analytic_sis_oracle
from .spec import EvaluatorSpec, build_evaluator, evaluate, load_evaluator, load_spec

__all__ = [
    "CountingEvaluator",
    "Evaluator",
    "EvaluatorError",
    "EvaluatorSpec",
    "ExternalEvaluator",
    "ExternalModelError",
    "FunctionEvaluator",
    "GLM",
    "MLP",
    "PWMScore",
    "PatternDistance",
    "SubfunctionCombination",
    "analytic_sis_oracle",
    "build_evaluator",
    "evaluate",
    "load_evaluator",
    "load_spec",
]
