import json

import numpy as np
import pytest
from scipy.special import expit

from sis_kit import sis_collection
from sis_kit.baselines import (
    AttributionScores,
    assemble_attribution_budget,
    assemble_length_constrained,
    assemble_sufficiency,
    feature_importance,
    load_attributions,
    ordering_from_scores,
    perturbation_ordering,
    sis_length_for,
)
from sis_kit.datagen import gen_planted_motif, pwm_spec
from sis_kit.masking import compute_mean_baseline
from sis_kit.models import GLM, CountingEvaluator, FunctionEvaluator, build_evaluator
from sis_kit.motif import Motif
from sis_kit.types import DimensionError, FeatureInput, ImputationBaseline, SisCollectionResult, SufficientInputSubset

from instances import glm_instance


def _ones(p):
    x = FeatureInput.from_array(np.ones(p), "x")
    return x, ImputationBaseline.zeros_like(x)


MAX2 = FunctionEvaluator(lambda X: X.max(axis=1))


class TestOrderings:
    def test_linear_importance(self):
        x, z = _ones(3)
        model = GLM([3.0, 1.0, 2.0])
        np.testing.assert_array_equal(feature_importance(model, x, z), [3.0, 1.0, 2.0])
        assert perturbation_ordering(model, x, z) == [1, 2, 0]

    def test_constant_model(self):
        x, z = _ones(4)
        model = FunctionEvaluator(lambda X: np.full(len(X), 2.0))
        assert perturbation_ordering(model, x, z) == [0, 1, 2, 3]

    def test_interaction_hides_importance(self):
        x, z = _ones(2)
        np.testing.assert_array_equal(feature_importance(MAX2, x, z), [0.0, 0.0])

    def test_p_plus_one_evaluations_in_one_batch(self):
        x, z = _ones(7)
        model = CountingEvaluator(GLM(np.arange(7.0)))
        perturbation_ordering(model, x, z)
        assert model.n_evals == 8 and model.n_calls == 1

    def test_scores_ascending_stable(self):
        assert ordering_from_scores([0.5, 0.1, 0.5, -1.0]) == [3, 1, 0, 2]


class TestSufficiency:
    def test_matches_sis_on_glm(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            spec, x, tau, z, _ = glm_instance(rng)
            model = GLM(spec.parameters["weights"], link="logistic")
            r = assemble_sufficiency(model, x, tau, perturbation_ordering(model, x, z), z)
            first = sis_collection(model, x, tau, z).sis_list[0]
            assert set(r.indices) == first.as_set()
            assert r.sufficiency_met and r.method_tag == "suff_perturb"

    def test_unreachable(self):
        x, z = _ones(3)
        model = GLM([3.0, 1.0, 2.0], link="logistic")
        r = assemble_sufficiency(model, x, 0.999, [1, 2, 0], z)
        assert not r.sufficiency_met
        assert r.indices == (0, 2, 1)

    def test_reversed_ordering_is_longer(self):
        x, z = _ones(3)
        model = GLM([3.0, 1.0, 2.0], link="logistic")
        tau = float(expit(4.5))
        best = assemble_sufficiency(model, x, tau, [1, 2, 0], z)
        worst = assemble_sufficiency(model, x, tau, [0, 2, 1], z)
        assert len(best.indices) == 2 and len(worst.indices) == 3


class TestMotifOrderings:
    """The motif score is additive inside its best window, so without saturation
    single-feature perturbation ranks features exactly like backward selection."""

    def _setup(self, scale, bias):
        motif = Motif.near_deterministic("TGACTCAG", 0.97)
        data, labels = gen_planted_motif(60, 30, motif, 1.0, 0)
        return build_evaluator(pwm_spec(motif, scale, bias)), data, compute_mean_baseline(data)

    def test_unsaturated_matches_sis(self):
        model, data, base = self._setup(1.0, -3.0)
        for x in data[:20]:
            tau = model.score_one(x)
            if model.score_one(FeatureInput(tuple(base.mask_vectors), x.source_id)) >= tau:
                continue
            first = sis_collection(model, x, tau, base).sis_list[0]
            r = assemble_sufficiency(model, x, tau, perturbation_ordering(model, x, base), base)
            assert set(r.indices) == first.as_set()

    def test_saturated_importances_vanish(self):
        model, data, base = self._setup(8.0, -10.0)
        x = data[0]
        assert model.score_one(x) == 1.0
        np.testing.assert_array_equal(feature_importance(model, x, base), np.zeros(x.p))


class TestLengthConstrained:
    def test_prefixes(self):
        x, z = _ones(3)
        model = GLM([3.0, 1.0, 2.0], link="logistic")
        R = [1, 2, 0]
        r = assemble_length_constrained(x, R, 1, model=model, tau=0.9, baseline=z)
        assert r.indices == (0,)
        full = assemble_length_constrained(x, R, 3, model=model, tau=0.9, baseline=z)
        assert set(full.indices) == {0, 1, 2} and full.sufficiency_met

    def test_interaction_insufficient(self):
        x, z = _ones(2)
        r = assemble_length_constrained(x, perturbation_ordering(MAX2, x, z), 1, model=MAX2, tau=1.0, baseline=z)
        assert r.indices == (1,) and r.sufficiency_met
        y = FeatureInput.from_array([1.0, 0.5])
        r = assemble_length_constrained(y, [0, 1], 1, model=MAX2, tau=1.0, baseline=ImputationBaseline.zeros_like(y))
        assert r.indices == (1,) and not r.sufficiency_met

    def test_k_range(self):
        x, z = _ones(3)
        with pytest.raises(ValueError):
            assemble_length_constrained(x, [0, 1, 2], 0, model=MAX2, tau=1.0, baseline=z)
        with pytest.raises(ValueError):
            assemble_length_constrained(x, [0, 1, 2], 4, model=MAX2, tau=1.0, baseline=z)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_cardinality(self, k):
        x, z = _ones(5)
        r = assemble_length_constrained(x, [4, 0, 3, 1, 2], k, model=MAX2, tau=1.0, baseline=z, method_tag="attrib_len")
        assert len(r.indices) == k and r.method_tag == "attrib_len"


class TestAttributionBudget:
    def _run(self, scores, tau, zero_ref):
        x, z = _ones(len(scores))
        return assemble_attribution_budget(GLM(scores), x, tau, AttributionScores("x", scores), zero_ref, z)

    def test_prefix_sum(self):
        r = self._run([0.5, 0.3, 0.2], 0.7, 0.0)
        assert r.indices == (0, 1) and r.budget_reached

    def test_budget_boundary_included(self):
        r = self._run([0.5, 0.25, 0.25], 0.75, 0.0)
        assert r.indices == (0, 1)

    def test_nonpositive_budget_gives_one(self):
        r = self._run([0.2, 0.5, 0.3], 0.4, 0.6)
        assert r.indices == (1,) and r.budget_reached

    def test_unreachable_budget(self):
        r = self._run([0.1, 0.2], 5.0, 0.0)
        assert set(r.indices) == {0, 1} and r.budget_reached is False

    def test_length_checked(self):
        x, z = _ones(3)
        with pytest.raises(DimensionError):
            assemble_attribution_budget(GLM([1.0] * 3), x, 1.0, AttributionScores("x", [1.0]), 0.0, z)

    def test_load(self, tmp_path):
        p = tmp_path / "a.jsonl"
        p.write_text("\n".join(json.dumps({"input_ref": r, "scores": [1, 2]}) for r in "ab") + "\n")
        got = load_attributions(p)
        assert set(got) == {"a", "b"} and got["a"].scores == (1.0, 2.0)


class TestSisLength:
    def _result(self, *lengths):
        sis = [SufficientInputSubset(tuple(range(100 * k, 100 * k + n)), 1.0) for k, n in enumerate(lengths)]
        return SisCollectionResult("x", sis, 0.0)

    def test_median_rounds_half_up(self):
        assert sis_length_for(self._result(2, 3)) == 3
        assert sis_length_for(self._result(2, 3, 9)) == 3

    def test_first(self):
        assert sis_length_for(self._result(4, 1), "first") == 4

    def test_empty(self):
        assert sis_length_for(SisCollectionResult("x", (), 0.0)) is None
