import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from planted import planted_corpus
from summarank.reranker import GreedyMatchReranker


@pytest.fixture(scope="module")
def corpus():
    return planted_corpus(seed=21, n_train=16, n_test=6)


def small_reranker(provider, **kw):
    base = dict(
        dim=16,
        heads=4,
        n_blocks=2,
        warmup_steps=20,
        lr_scale=0.05,
        max_steps=40,
        batch_size=4,
        eval_every=20,
        seed=0,
        provider=provider,
    )
    base.update(kw)
    return GreedyMatchReranker(**base)


class TestEstimatorContract:
    def test_not_fitted(self, corpus):
        _, test_ex, provider = corpus
        with pytest.raises(NotFittedError):
            small_reranker(provider).predict(test_ex)

    def test_fit_returns_self_and_predict_shape(self, corpus):
        train_ex, test_ex, provider = corpus
        est = small_reranker(provider)
        assert est.fit(train_ex) is est
        preds = est.predict(test_ex)
        assert preds.shape == (len(test_ex),)
        assert all(0 <= p < len(ex.candidates.candidates) for p, ex in zip(preds, test_ex))

    def test_get_set_params(self, corpus):
        _, _, provider = corpus
        est = small_reranker(provider, rank_margin=0.02)
        assert est.get_params()["rank_margin"] == 0.02
        est.set_params(max_steps=7)
        assert est.max_steps == 7

    def test_finetune_requires_init(self, corpus):
        train_ex, _, provider = corpus
        with pytest.raises(ValueError, match="init_params"):
            small_reranker(provider, mode="finetune").fit(train_ex)

    def test_finetune_continues_from_init(self, corpus):
        train_ex, _, provider = corpus
        pre = small_reranker(provider, mode="pretrain").fit(train_ex)
        ft = small_reranker(provider, mode="finetune").fit(train_ex, init_params=pre.params_)
        assert ft.params_.dim == pre.params_.dim

    def test_decision_function_matches_predict(self, corpus):
        train_ex, test_ex, provider = corpus
        est = small_reranker(provider).fit(train_ex)
        scores = est.decision_function(test_ex)
        preds = est.predict(test_ex)
        assert [int(np.argmax(s)) for s in scores] == list(preds)

    def test_untrained_selection_via_initial_params(self, corpus):
        _, test_ex, provider = corpus
        est = small_reranker(provider)
        est.params_ = est.initial_params()
        acc = est.selection_accuracy(test_ex)
        assert 0.0 <= acc <= 1.0

    def test_deterministic_fit(self, corpus):
        train_ex, _, provider = corpus
        a = small_reranker(provider).fit(train_ex)
        b = small_reranker(provider).fit(train_ex)
        for name in a.params_.tensors:
            np.testing.assert_array_equal(a.params_.tensors[name], b.params_.tensors[name])

    def test_tuple_inputs_accepted(self, corpus):
        train_ex, test_ex, provider = corpus
        as_tuples = [(e.document, e.reference, e.candidates) for e in train_ex]
        est = small_reranker(provider).fit(as_tuples)
        preds = est.predict([(e.document, e.candidates) for e in test_ex])
        assert len(preds) == len(test_ex)

    def test_mismatched_ids_rejected(self, corpus):
        train_ex, _, provider = corpus
        bad = [(train_ex[0].document, train_ex[1].candidates)]
        with pytest.raises(ValueError, match="paired"):
            small_reranker(provider).fit(bad)
