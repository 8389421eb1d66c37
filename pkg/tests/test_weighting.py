import numpy as np
import pytest

from summarank.weighting import (
    WeightVector,
    expected_shapes,
    init_scorer_params,
    softmax,
    token_weights,
    transformer_forward,
    zero_grads,
)


def neutralized_params(dim=4):
    """Head whose transformer is the identity map (zero output projections)."""
    params = init_scorer_params(dim=dim, heads=2, n_blocks=2, use_projection=False, seed=0)
    for b in range(params.n_blocks):
        params.tensors[f"block{b}.wo"][:] = 0.0
        params.tensors[f"block{b}.w2"][:] = 0.0
    return params


class TestTransformer:
    def test_neutralized_head_is_identity(self):
        params = neutralized_params()
        x = np.random.default_rng(0).normal(size=(5, 4))
        y, _ = transformer_forward(x, params)
        np.testing.assert_allclose(y, x, atol=1e-12)

    def test_output_shape(self):
        params = init_scorer_params(dim=8, heads=4, n_blocks=2, seed=1)
        x = np.random.default_rng(1).normal(size=(6, 8))
        y, caches = transformer_forward(x, params)
        assert y.shape == (6, 8)
        assert len(caches) == 2


class TestTokenWeights:
    def test_sum_to_one(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=2, seed=0)
        rng = np.random.default_rng(0)
        for _ in range(20):
            doc = rng.normal(size=(rng.integers(2, 9), 8))
            w = token_weights(doc, params).weights
            assert w.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(w > 0)

    def test_identical_rows_get_equal_weights(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=2, seed=0)
        row = np.random.default_rng(3).normal(size=8)
        doc = np.vstack([params.global_slot, row, row])
        w = token_weights(doc, params).weights
        assert w[0] == pytest.approx(w[1], abs=1e-12)
        assert w[0] == pytest.approx(0.5, abs=1e-9)

    def test_neutralized_head_matches_raw_softmax(self):
        params = neutralized_params(dim=4)
        rng = np.random.default_rng(4)
        doc = rng.normal(size=(4, 4))  # row 0 acts as the global slot
        w = token_weights(doc, params).weights
        logits = doc[1:] @ doc[0] / np.sqrt(4)
        np.testing.assert_allclose(w, softmax(logits), atol=1e-12)

    def test_global_slot_excluded(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=2, seed=0)
        doc = np.random.default_rng(5).normal(size=(4, 8))
        assert len(token_weights(doc, params).weights) == 3

    def test_shape_mismatch_errors(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=2, seed=0)
        with pytest.raises(ValueError):
            token_weights(np.ones((3, 4)), params)
        with pytest.raises(ValueError):
            token_weights(np.ones((1, 8)), params)


class TestParams:
    def test_expected_shapes_cover_tensors(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=3, use_projection=True, seed=0)
        assert set(params.tensors) == set(expected_shapes(8, 3, True))
        params.validate()

    def test_validate_rejects_nan(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=1, seed=0)
        params.tensors["global_slot"][0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            params.validate()

    def test_validate_rejects_bad_shape(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=1, seed=0)
        params.tensors["global_slot"] = np.zeros(4)
        with pytest.raises(ValueError, match="shape"):
            params.validate()

    def test_copy_is_deep(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=1, seed=0)
        clone = params.copy()
        clone.tensors["global_slot"][0] += 1.0
        assert params.global_slot[0] != clone.global_slot[0]

    def test_zero_grads_shapes(self):
        params = init_scorer_params(dim=8, heads=2, n_blocks=2, seed=0)
        grads = zero_grads(params)
        assert set(grads) == set(params.tensors)
        assert all(np.all(g == 0) for g in grads.values())

    def test_dim_head_divisibility(self):
        with pytest.raises(ValueError, match="divisible"):
            init_scorer_params(dim=6, heads=4, n_blocks=1, seed=0)


class TestWeightVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            WeightVector(np.array([0.5, 0.6]))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            WeightVector(np.array([1.0, 0.0]))
