import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from summarank.baselines import (
    EmbeddingSimilaritySelector,
    FeatureRanker,
    fit_ranker,
    greedy_similarity,
    rank_with,
    unsupervised_select,
)


def separable_groups(n_groups=12, n_cands=4, seed=0, flip=False):
    """Feature 0 perfectly tracks the (descending) quality order."""
    rng = np.random.default_rng(seed)
    groups = []
    for _ in range(n_groups):
        base = 0.1 * rng.normal(size=(n_cands, 3))
        signal = np.linspace(1.0, 0.0, n_cands) + 0.01 * rng.random(n_cands)
        base[:, 0] = -signal if flip else signal
        groups.append([row for row in base])
    return groups


class TestFitRanker:
    def test_separable_orders_heldout(self):
        groups = separable_groups(seed=1)
        ranker = fit_ranker(groups[:9], c=1e-3)
        for group in separable_groups(n_groups=5, seed=2)[0:5]:
            assert rank_with(ranker, group) == 0
            scores = [ranker.decision(x) for x in group]
            assert all(scores[i] > scores[i + 1] for i in range(len(scores) - 1))

    def test_constant_features_give_zero_weights(self):
        groups = [[np.ones(3) for _ in range(3)] for _ in range(4)]
        with pytest.raises(ValueError, match="degenerate"):
            fit_ranker(groups, c=1e-3)

    def test_mixed_degenerate_groups_skipped(self):
        good = separable_groups(n_groups=6, seed=3)
        degenerate = [[np.ones(3) for _ in range(3)]]
        ranker = fit_ranker(good + degenerate, c=1e-3)
        assert np.any(ranker.weights != 0)

    def test_sign_flip_flips_weight(self):
        a = fit_ranker(separable_groups(seed=4), c=1e-3)
        b = fit_ranker(separable_groups(seed=4, flip=True), c=1e-3)
        assert a.weights[0] > 0 > b.weights[0]

    def test_cross_validation_picks_a_grid_value(self):
        grid = (1e-3, 1e-1)
        ranker = fit_ranker(separable_groups(seed=5), c_grid=grid, folds=3)
        assert ranker.c in grid

    def test_loss_nonincreasing(self):
        from summarank.baselines import _hinge_objective, _pair_diffs

        groups = separable_groups(seed=6)
        stacked = np.vstack([np.asarray(g) for g in groups])
        mean, std = stacked.mean(0), stacked.std(0)
        std = np.where(std > 0, std, 1.0)
        groups_std = [[(np.asarray(x) - mean) / std for x in g] for g in groups]
        diffs = _pair_diffs(groups_std)
        losses = []
        w = np.zeros(3)
        loss, grad = _hinge_objective(w, diffs, 1e-3)
        losses.append(loss)
        for _ in range(50):
            eta = 1.0
            while True:
                trial = w - eta * grad
                trial_loss, trial_grad = _hinge_objective(trial, diffs, 1e-3)
                if trial_loss <= loss or eta < 1e-12:
                    break
                eta /= 2
            w, loss, grad = trial, trial_loss, trial_grad
            losses.append(loss)
        assert all(losses[i + 1] <= losses[i] + 1e-12 for i in range(len(losses) - 1))

    def test_short_groups_rejected(self):
        with pytest.raises(ValueError, match="two candidates"):
            fit_ranker([[np.ones(3)]], c=1e-3)


class TestRankWith:
    def test_singleton(self):
        ranker = fit_ranker(separable_groups(seed=7), c=1e-3)
        assert rank_with(ranker, [np.zeros(3)]) == 0

    def test_duplicates_lowest_index(self):
        ranker = fit_ranker(separable_groups(seed=8), c=1e-3)
        x = np.array([0.3, 0.1, 0.2])
        assert rank_with(ranker, [x, x.copy()]) == 0

    def test_dimension_mismatch(self):
        ranker = fit_ranker(separable_groups(seed=9), c=1e-3)
        with pytest.raises(ValueError, match="dimension"):
            rank_with(ranker, [np.zeros(5)])

    def test_rescaling_with_refit_stats_keeps_argmax(self):
        groups = separable_groups(seed=10)
        ranker = fit_ranker(groups, c=1e-3)
        scaled_groups = [[2.5 * x for x in g] for g in groups]
        scaled = fit_ranker(scaled_groups, c=1e-3)
        probe = separable_groups(n_groups=3, seed=11)
        for g in probe:
            assert rank_with(ranker, g) == rank_with(scaled, [2.5 * x for x in g])


class TestFeatureRankerEstimator:
    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            FeatureRanker().predict([separable_groups(n_groups=1)[0]])

    def test_fit_predict(self):
        est = FeatureRanker(c=1e-3).fit(separable_groups(seed=12))
        preds = est.predict(separable_groups(n_groups=3, seed=13))
        assert list(preds) == [0, 0, 0]

    def test_get_params_roundtrip(self):
        est = FeatureRanker(c=0.5, folds=4)
        params = est.get_params()
        assert params["c"] == 0.5 and params["folds"] == 4
        est.set_params(folds=2)
        assert est.folds == 2


class TestUnsupervisedSelect:
    def test_identical_embeddings_beat_orthogonal(self):
        doc = np.eye(3)
        identical = doc.copy()
        orthogonal = np.roll(np.eye(3), 1, axis=1) * 0  # zero rows: cosine 0
        orthogonal = np.array([[0.0, 0.0, 0.0]])
        assert unsupervised_select(doc, [orthogonal, identical]) == 1

    def test_all_identical_lowest_index(self):
        doc = np.eye(2)
        assert unsupervised_select(doc, [doc.copy(), doc.copy()]) == 0

    def test_hand_example(self):
        # doc rows e1, e2; candidate A = e1 -> R = (1+0)/2, P = 1, F = 2*0.5/1.5
        doc = np.array([[1.0, 0.0], [0.0, 1.0]])
        a = np.array([[1.0, 0.0]])
        value = greedy_similarity(doc, a)
        assert value == pytest.approx(2 * 0.5 * 1.0 / 1.5)
        b = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert unsupervised_select(doc, [a, b]) == 1

    def test_no_shift_zero_for_orthogonal(self):
        doc = np.array([[1.0, 0.0]])
        cand = np.array([[0.0, 1.0]])
        assert greedy_similarity(doc, cand) == 0.0

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            unsupervised_select(np.eye(2), [])


class TestEmbeddingSimilaritySelector:
    def test_predict_with_provider(self):
        from summarank.candidates import Candidate, CandidateSet
        from summarank.embeddings import HashEmbeddings
        from summarank.textproc import Document, Sentence

        provider = HashEmbeddings(dim=8, seed=0)
        doc = Document(
            doc_id="d", sentences=(Sentence(index=0, tokens=("alpha", "beta", "gamma")),)
        )
        cands = CandidateSet(
            doc_id="d",
            candidates=(
                Candidate(text_tokens=("zeta", "omega"), system_tag="bad"),
                Candidate(text_tokens=("alpha", "beta"), system_tag="good"),
            ),
            origin="external",
        )
        est = EmbeddingSimilaritySelector(provider=provider).fit()
        assert list(est.predict([(doc, cands)])) == [1]

    def test_missing_provider_errors(self):
        with pytest.raises(ValueError, match="provider"):
            EmbeddingSimilaritySelector().predict([])
