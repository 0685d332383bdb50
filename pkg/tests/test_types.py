import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sis_kit.types import (
    BackSelectTrace,
    DecisionThreshold,
    DimensionError,
    FeatureInput,
    ImputationBaseline,
    MaskedInput,
    Rationale,
    SisCollectionResult,
    SufficientInputSubset,
    materialize,
    sis_rationales,
)


def _roundtrip(obj):
    return type(obj).from_dict(json.loads(json.dumps(obj.to_dict())))


class TestFeatureInput:
    def test_scalar_from_1d(self):
        x = FeatureInput.from_array([1.0, 2.0, 3.0])
        assert x.p == 3
        assert x.dims == (1, 1, 1)
        np.testing.assert_array_equal(x.flat(), [1.0, 2.0, 3.0])

    def test_vectors_from_2d(self):
        x = FeatureInput.from_array(np.arange(6.0).reshape(3, 2))
        assert x.dims == (2, 2, 2)

    def test_ragged_dims(self):
        x = FeatureInput(([1.0], [2.0, 3.0]))
        assert x.dims == (1, 2)
        np.testing.assert_array_equal(x.flat(), [1.0, 2.0, 3.0])

    def test_features_are_read_only(self):
        x = FeatureInput.from_array([1.0, 2.0])
        with pytest.raises(ValueError):
            x.features[0][0] = 5.0

    def test_source_array_is_copied(self):
        a = np.array([1.0, 2.0])
        x = FeatureInput.from_array(a)
        a[0] = 9.0
        assert x.features[0][0] == 1.0

    def test_rejects_empty(self):
        with pytest.raises(DimensionError):
            FeatureInput(())
        with pytest.raises(DimensionError):
            FeatureInput(([],))

    def test_token_labels_length(self):
        with pytest.raises(DimensionError):
            FeatureInput.from_array([1.0, 2.0], token_labels=("a",))

    def test_roundtrip(self):
        x = FeatureInput(([1.5], [2.0, -3.25]), "id7", ("a", "b"))
        assert _roundtrip(x) == x


class TestImputationBaseline:
    def test_flat_layout(self):
        x = FeatureInput(([1.0], [2.0, 3.0]))
        z = ImputationBaseline(([0.5], [0.1, 0.2]))
        np.testing.assert_array_equal(z.flat_for(x), [0.5, 0.1, 0.2])

    def test_shared_tiles(self):
        x = FeatureInput.from_array(np.ones((3, 2)))
        z = ImputationBaseline(([0.25, 0.75],), shared=True)
        np.testing.assert_array_equal(z.flat_for(x), [0.25, 0.75] * 3)

    def test_shared_needs_one_vector(self):
        with pytest.raises(DimensionError):
            ImputationBaseline(([0.0], [0.0]), shared=True)

    def test_incompatible(self):
        x = FeatureInput.from_array([1.0, 2.0])
        with pytest.raises(DimensionError):
            ImputationBaseline(([0.0],)).check_compatible(x)
        with pytest.raises(DimensionError):
            ImputationBaseline(([0.0], [0.0, 0.0])).check_compatible(x)

    def test_roundtrip(self):
        z = ImputationBaseline(([0.5], [0.1, 0.2]), "m", False)
        assert _roundtrip(z) == z


class TestMaterialize:
    def test_keeps_subset(self):
        x = FeatureInput.from_array([1.0, 2.0, 3.0], "a")
        z = ImputationBaseline.zeros_like(x)
        np.testing.assert_array_equal(materialize(x, [0, 2], z).flat(), [1.0, 0.0, 3.0])

    def test_empty_and_full(self):
        x = FeatureInput.from_array([1.0, 2.0])
        z = ImputationBaseline(([7.0], [8.0]))
        np.testing.assert_array_equal(materialize(x, [], z).flat(), [7.0, 8.0])
        assert materialize(x, [0, 1], z) == x

    def test_out_of_range(self):
        x = FeatureInput.from_array([1.0, 2.0])
        with pytest.raises(IndexError):
            materialize(x, [2], ImputationBaseline.zeros_like(x))

    def test_masked_input(self):
        x = FeatureInput.from_array([1.0, 2.0])
        m = MaskedInput(x, (1,))
        np.testing.assert_array_equal(m.materialize(ImputationBaseline.zeros_like(x)).flat(), [0.0, 2.0])
        assert _roundtrip(m) == m
        with pytest.raises(IndexError):
            MaskedInput(x, (5,))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=12), st.data())
    def test_unmasked_features_untouched(self, values, data):
        x = FeatureInput.from_array(values)
        z = ImputationBaseline(tuple(np.full(1, -7.0) for _ in values))
        S = data.draw(st.sets(st.integers(0, len(values) - 1)))
        out = materialize(x, S, z).flat()
        for i in range(len(values)):
            assert out[i] == (values[i] if i in S else -7.0)


class TestDecisionThreshold:
    def test_above(self):
        t = DecisionThreshold(0.5)
        assert t.met(0.5) and not t.met(0.49)
        assert t.oriented_tau == 0.5

    def test_below(self):
        t = DecisionThreshold(0.5, "below")
        assert t.met(0.5) and t.met(0.1) and not t.met(0.51)
        assert t.sign == -1.0 and t.oriented_tau == -0.5

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            DecisionThreshold(0.5, "sideways")

    def test_coerce(self):
        t = DecisionThreshold(1.0, "below")
        assert DecisionThreshold.coerce(t) is t
        assert DecisionThreshold.coerce(2) == DecisionThreshold(2.0)


class TestResults:
    def test_sis_validation(self):
        with pytest.raises(ValueError):
            SufficientInputSubset((), 1.0)
        with pytest.raises(ValueError):
            SufficientInputSubset((1, 1), 1.0)
        with pytest.raises(ValueError):
            SufficientInputSubset((1, 2), 1.0, (0,))

    def test_sis_set(self):
        s = SufficientInputSubset((3, 1), 0.9, (4, 2))
        assert len(s) == 2 and s.as_set() == {1, 3}
        assert _roundtrip(s) == s

    def test_trace_lengths(self):
        with pytest.raises(ValueError):
            BackSelectTrace((0, 1), (0.5,))

    def test_collection_roundtrip_and_union(self):
        r = SisCollectionResult(
            "x",
            (SufficientInputSubset((2, 0), 0.9, (2, 1)), SufficientInputSubset((1,), 0.8, (0,))),
            0.1,
            (BackSelectTrace((1, 0, 2), (0.95, 0.9, 0.2)), BackSelectTrace((1,), (0.1,))),
            DecisionThreshold(0.7),
            0.99,
        )
        assert r.union() == {0, 1, 2}
        assert _roundtrip(r) == r
        rats = sis_rationales(r)
        assert [x.indices for x in rats] == [(2, 0), (1,)]
        assert all(x.method_tag == "sis" and x.sufficiency_met for x in rats)

    def test_rationale_tags(self):
        with pytest.raises(ValueError):
            Rationale("magic", (0,), 1.0, True)
        r = Rationale("top_attrib", (0, 3), 0.4, False, "a", True)
        assert _roundtrip(r) == r
