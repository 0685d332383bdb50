import numpy as np
import pytest
from scipy.special import expit

from sis_kit import sis_collection
from sis_kit.models import EvaluatorSpec, analytic_sis_oracle, build_evaluator
from sis_kit.types import DecisionThreshold, FeatureInput, ImputationBaseline

from instances import KINDS


def _glm(weights, link="logistic", intercept=0.0):
    return EvaluatorSpec("glm", {"weights": list(weights), "intercept": intercept, "link": link})


def _ones(p):
    x = FeatureInput.from_array(np.ones(p))
    return x, ImputationBaseline.zeros_like(x)


class TestGlmOracle:
    def test_top_contributions(self):
        x, z = _ones(3)
        assert analytic_sis_oracle(_glm([3.0, 1.0, 2.0]), x, float(expit(4.5)), z) == [frozenset({0, 2})]

    def test_repeats_while_leftover_suffices(self):
        x, z = _ones(4)
        got = analytic_sis_oracle(_glm([3.0, 1.0, 2.0, 2.5], "identity"), x, 2.2, z)
        assert got == [frozenset({0}), frozenset({3}), frozenset({2, 1})]

    def test_rejects_nonzero_baseline(self):
        x = FeatureInput.from_array(np.ones(2))
        z = ImputationBaseline(([0.1], [0.0]))
        assert analytic_sis_oracle(_glm([1.0, 2.0]), x, 0.6, z) is None

    def test_rejects_ties_and_boundary(self):
        x, z = _ones(2)
        assert analytic_sis_oracle(_glm([1.0, 1.0], "identity"), x, 0.5, z) is None
        assert analytic_sis_oracle(_glm([1.0, 2.0], "identity"), x, 2.0, z) is None

    def test_rejects_tau_below_intercept(self):
        x, z = _ones(2)
        assert analytic_sis_oracle(_glm([1.0, 2.0], "identity", 1.0), x, 0.5, z) is None

    def test_rejects_below_direction(self):
        x, z = _ones(2)
        assert analytic_sis_oracle(_glm([1.0, 2.0], "identity"), x, DecisionThreshold(0.5, "below"), z) is None


class TestCombinationOracle:
    def _spec(self, reduce):
        inner = [
            {"kind": "glm", "parameters": {"weights": [1.0, 1.0], "intercept": -0.5}},
            {"kind": "glm", "parameters": {"weights": [2.0], "intercept": -0.2}},
        ]
        return EvaluatorSpec(f"{reduce}_of_subfunctions", {"subsets": [[0, 2], [3]], "inner": inner})

    def test_max_in_decreasing_score_order(self):
        x, z = _ones(4)
        # g1 = 1.5, g2 = 1.8; each drops below 1 when any feature is masked
        assert analytic_sis_oracle(self._spec("max"), x, 1.0, z) == [frozenset({3}), frozenset({0, 2})]

    def test_min_union(self):
        x, z = _ones(4)
        assert analytic_sis_oracle(self._spec("min"), x, 1.0, z) == [frozenset({0, 2, 3})]

    def test_rejects_non_minimal(self):
        x, z = _ones(4)
        assert analytic_sis_oracle(self._spec("max"), x, 0.4, z) is None

    def test_rejects_overlap(self):
        inner = [{"kind": "glm", "parameters": {"weights": [1.0]}}] * 2
        spec = EvaluatorSpec("max_of_subfunctions", {"subsets": [[0], [0]], "inner": inner})
        x, z = _ones(2)
        assert analytic_sis_oracle(spec, x, 0.5, z) is None


class TestPatternOracle:
    def test_closer_features(self):
        spec = EvaluatorSpec("pattern_distance", {"support": [0, 1, 3], "center": [2.0, -1.0, 0.0]})
        x = FeatureInput.from_array([1.9, -0.5, 7.0, 0.0])
        z = ImputationBaseline.zeros_like(x)
        tau = build_evaluator(spec).score_one(x)
        # feature 3 sits on its target and on the mask value, so it is not closer
        assert analytic_sis_oracle(spec, x, tau, z) == [frozenset({0, 1})]

    def test_rejects_farther_feature(self):
        spec = EvaluatorSpec("pattern_distance", {"support": [0], "center": [1.0]})
        x = FeatureInput.from_array([3.0])
        z = ImputationBaseline.zeros_like(x)
        assert analytic_sis_oracle(spec, x, build_evaluator(spec).score_one(x), z) is None

    def test_requires_tau_equal_score(self):
        spec = EvaluatorSpec("pattern_distance", {"support": [0], "center": [1.0]})
        x = FeatureInput.from_array([0.9])
        z = ImputationBaseline.zeros_like(x)
        assert analytic_sis_oracle(spec, x, 0.1, z) is None


def test_other_kinds_have_no_oracle():
    spec = EvaluatorSpec("mlp", {"layers": [{"weights": [[1.0]]}]})
    x, z = _ones(1)
    assert analytic_sis_oracle(spec, x, 0.5, z) is None


@pytest.mark.parametrize("kind", sorted(KINDS))
def test_sis_collection_agrees_with_oracle(kind):
    rng = np.random.default_rng(123)
    for _ in range(50):
        spec, x, tau, z, expected = KINDS[kind](rng)
        got = sis_collection(build_evaluator(spec), x, tau, z)
        assert [s.as_set() for s in got.sis_list] == expected
