"""Trainable candidate reranker with a scikit-learn style interface.

fit() runs margin ranking-loss training over documents paired with
ROUGE-sorted candidate sets; predict() returns the argmax-score candidate
index per document.  Hyperparameters mirror the training configuration so
the estimator composes with standard tooling via get_params/set_params.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .embeddings import HashEmbeddings
from .matching import select
from .training import TrainConfig, evaluate_selection, train
from .validation import as_selection_pairs, as_train_examples
from .weighting import ScorerParams, init_scorer_params


class GreedyMatchReranker(BaseEstimator):
    """Selects candidate summaries by trained greedy-matching similarity."""

    def __init__(
        self,
        dim=64,
        heads=4,
        n_blocks=2,
        use_projection=True,
        rank_margin=0.01,
        warmup_steps=10000,
        lr_scale=0.002,
        max_steps=200,
        batch_size=8,
        eval_every=50,
        seed=0,
        optimizer_betas=(0.9, 0.999),
        optimizer_eps=1e-8,
        mode="supervised",
        val_fraction=0.2,
        provider=None,
    ):
        self.dim = dim
        self.heads = heads
        self.n_blocks = n_blocks
        self.use_projection = use_projection
        self.rank_margin = rank_margin
        self.warmup_steps = warmup_steps
        self.lr_scale = lr_scale
        self.max_steps = max_steps
        self.batch_size = batch_size
        self.eval_every = eval_every
        self.seed = seed
        self.optimizer_betas = optimizer_betas
        self.optimizer_eps = optimizer_eps
        self.mode = mode
        self.val_fraction = val_fraction
        self.provider = provider

    # -- helpers -----------------------------------------------------------

    def _make_provider(self):
        return self.provider if self.provider is not None else HashEmbeddings(self.dim, self.seed)

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            rank_margin=self.rank_margin,
            warmup_steps=self.warmup_steps,
            lr_scale=self.lr_scale,
            max_steps=self.max_steps,
            batch_size=self.batch_size,
            seed=self.seed,
            eval_every=self.eval_every,
            optimizer_betas=tuple(self.optimizer_betas),
            optimizer_eps=self.optimizer_eps,
            mode=self.mode,
            val_fraction=self.val_fraction,
        )

    def initial_params(self) -> ScorerParams:
        return init_scorer_params(
            dim=self.dim,
            heads=self.heads,
            n_blocks=self.n_blocks,
            use_projection=self.use_projection,
            seed=self.seed,
        )

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("GreedyMatchReranker is not fitted")

    # -- estimator API -----------------------------------------------------

    def fit(self, X, y=None, init_params: ScorerParams | None = None, val=None):
        """Train on documents with ROUGE-sorted candidate sets.

        X holds TrainExample objects or (document, [reference,] candidate_set)
        tuples.  finetune mode continues from `init_params` (required there,
        optional otherwise); pretrain and supervised modes start fresh.
        """
        config = self._train_config()
        if config.mode == "finetune" and init_params is None:
            raise ValueError("finetune mode requires init_params from a pretrained checkpoint")
        examples = as_train_examples(X)
        init = init_params.copy() if init_params is not None else self.initial_params()
        val_examples = as_train_examples(val) if val is not None else None
        self.state_ = train(examples, config, init, self._make_provider(), val_examples)
        self.params_ = self.state_.params
        return self

    def predict(self, X) -> np.ndarray:
        """Chosen candidate index per (document, candidate_set) item."""
        self._check_fitted()
        provider = self._make_provider()
        return np.array(
            [select(doc, cands, self.params_, provider)[0] for doc, cands in as_selection_pairs(X)]
        )

    def decision_function(self, X) -> list[np.ndarray]:
        """Per-candidate scores for each item."""
        self._check_fitted()
        provider = self._make_provider()
        out = []
        for doc, cands in as_selection_pairs(X):
            _, breakdowns = select(doc, cands, self.params_, provider)
            out.append(np.array([b.score for b in breakdowns]))
        return out

    def score_candidates(self, document, cand_set):
        """Full ScoreBreakdown list for one document's candidates."""
        self._check_fitted()
        return select(document, cand_set, self.params_, self._make_provider())

    def validation_rouge(self, X) -> float:
        """Mean ROUGE mean-F of the selected candidates over X."""
        self._check_fitted()
        return evaluate_selection(as_train_examples(X), self.params_, self._make_provider())

    def selection_accuracy(self, X) -> float:
        """Fraction of items where the selected candidate is the ROUGE-best."""
        choices = self.predict(X)
        correct = 0
        for choice, example in zip(choices, as_train_examples(X)):
            triples = [c.rouge_vs_ref for c in example.candidates.candidates]
            if any(t is None for t in triples):
                raise ValueError("candidates lack ROUGE scores; run attach_rouge first")
            best = int(np.argmax([t.mean_f for t in triples]))
            correct += int(choice == best)
        return correct / len(choices)
