"""Comparison selectors: a pairwise linear ranker and an unsupervised
embedding-similarity selector.

The linear ranker optimizes a pairwise hinge objective (better candidate
above worse candidate by a unit margin) with L2 regularization, by
full-batch subgradient descent with backtracking step halving so the
objective never increases.  The regularization constant comes from k-fold
cross-validation over a small grid unless given explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .features import FeatureVector
from .matching import _cosine_matrix

DEFAULT_C_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)


@dataclass
class LinearRanker:
    weights: np.ndarray
    bias: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    c: float

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.feature_mean) / self.feature_std

    def decision(self, x: np.ndarray) -> float:
        return float(self.weights @ self.standardize(np.asarray(x, dtype=float)) + self.bias)


def _as_array(vec) -> np.ndarray:
    if isinstance(vec, FeatureVector):
        return vec.as_array()
    return np.asarray(vec, dtype=float)


def _pair_diffs(groups_std) -> np.ndarray:
    """Stacked (better - worse) feature differences over all ordered pairs."""
    diffs = []
    for group in groups_std:
        n = len(group)
        for i in range(n):
            for j in range(i + 1, n):
                diffs.append(group[i] - group[j])
    return np.asarray(diffs)


def _hinge_objective(w, diffs, c):
    margins = 1.0 - diffs @ w
    active = margins > 0
    loss = margins[active].sum() / len(diffs) + c * float(w @ w)
    grad = -diffs[active].sum(axis=0) / len(diffs) + 2.0 * c * w
    return loss, grad


def _optimize(diffs, c, iters, step):
    w = np.zeros(diffs.shape[1])
    loss, grad = _hinge_objective(w, diffs, c)
    for _ in range(iters):
        eta = step
        for _ in range(40):
            trial = w - eta * grad
            trial_loss, trial_grad = _hinge_objective(trial, diffs, c)
            if trial_loss <= loss:
                break
            eta /= 2.0
        else:
            break
        w, loss, grad = trial, trial_loss, trial_grad
    return w, loss


def _pairwise_accuracy(w, groups_std) -> float:
    correct = 0.0
    total = 0
    for group in groups_std:
        scores = [g @ w for g in group]
        n = len(scores)
        for i in range(n):
            for j in range(i + 1, n):
                total += 1
                if scores[i] > scores[j]:
                    correct += 1.0
                elif scores[i] == scores[j]:
                    correct += 0.5
    return correct / total if total else 0.0


def fit_ranker(
    examples,
    c: float | None = None,
    c_grid=DEFAULT_C_GRID,
    folds: int = 3,
    iters: int = 300,
    step: float = 1.0,
) -> LinearRanker:
    """Fit the pairwise linear ranker.

    `examples` is a list of candidate feature lists, each ordered best to
    worst by ROUGE.  Groups whose candidates are all identical carry no
    ordering signal and are skipped.  When `c` is None, k-fold
    cross-validation on pairwise accuracy picks it from `c_grid` (ties go
    to the smaller value).
    """
    groups = []
    for example in examples:
        arrs = [_as_array(v) for v in example]
        if len(arrs) < 2:
            raise ValueError("each example needs at least two candidates")
        if all(np.array_equal(a, arrs[0]) for a in arrs[1:]):
            continue
        groups.append(arrs)
    if not groups:
        raise ValueError("no usable examples (all candidate lists degenerate)")

    stacked = np.vstack([a for g in groups for a in g])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    groups_std = [[(a - mean) / std for a in g] for g in groups]

    if c is None:
        folds = min(folds, len(groups_std))
        best_c, best_acc = None, -1.0
        for candidate_c in sorted(c_grid):
            accs = []
            for f in range(folds):
                held = groups_std[f::folds]
                rest = [g for i, g in enumerate(groups_std) if i % folds != f]
                if not rest or not held:
                    continue
                w, _ = _optimize(_pair_diffs(rest), candidate_c, iters, step)
                accs.append(_pairwise_accuracy(w, held))
            acc = float(np.mean(accs)) if accs else 0.0
            if acc > best_acc:
                best_acc, best_c = acc, candidate_c
        c = best_c if best_c is not None else sorted(c_grid)[0]

    w, _ = _optimize(_pair_diffs(groups_std), c, iters, step)
    return LinearRanker(weights=w, bias=0.0, feature_mean=mean, feature_std=std, c=float(c))


def rank_with(ranker: LinearRanker, feature_vectors) -> int:
    """Index of the highest-scoring candidate; ties go to the lowest index."""
    arrs = [_as_array(v) for v in feature_vectors]
    if not arrs:
        raise ValueError("no candidates to rank")
    if any(a.shape != ranker.weights.shape for a in arrs):
        raise ValueError("feature dimension does not match the fitted ranker")
    scores = [ranker.decision(a) for a in arrs]
    return int(np.argmax(scores))


class FeatureRanker(BaseEstimator):
    """Estimator wrapper around the pairwise linear ranker."""

    def __init__(self, c=None, c_grid=DEFAULT_C_GRID, folds=3, iters=300, step=1.0):
        self.c = c
        self.c_grid = c_grid
        self.folds = folds
        self.iters = iters
        self.step = step

    def fit(self, X, y=None):
        """X is a list of feature-vector lists, each ordered best to worst."""
        self.ranker_ = fit_ranker(
            X, c=self.c, c_grid=self.c_grid, folds=self.folds, iters=self.iters, step=self.step
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "ranker_"):
            raise NotFittedError("FeatureRanker is not fitted")

    def decision_function(self, X):
        self._check_fitted()
        return [np.array([self.ranker_.decision(_as_array(v)) for v in group]) for group in X]

    def predict(self, X):
        self._check_fitted()
        return np.array([rank_with(self.ranker_, group) for group in X])


def greedy_similarity(doc_emb: np.ndarray, cand_emb: np.ndarray) -> float:
    """Unweighted greedy-matching F between two embedding matrices (no shift)."""
    cos, _, _ = _cosine_matrix(np.asarray(doc_emb, dtype=float), np.asarray(cand_emb, dtype=float))
    recall = float(cos.max(axis=1).mean())
    precision = float(cos.max(axis=0).mean())
    if recall + precision == 0.0:
        return 0.0
    return 2.0 * recall * precision / (recall + precision)


def unsupervised_select(doc_emb: np.ndarray, cand_embs) -> int:
    """Pick the candidate most similar to the document under greedy matching."""
    if not len(cand_embs):
        raise ValueError("no candidate embeddings")
    scores = [greedy_similarity(doc_emb, c) for c in cand_embs]
    return int(np.argmax(scores))


class EmbeddingSimilaritySelector(BaseEstimator):
    """Unsupervised selector scoring candidates by embedding similarity."""

    def __init__(self, provider=None):
        self.provider = provider

    def fit(self, X=None, y=None):
        return self

    def predict(self, X):
        """X is a list of (Document, CandidateSet) pairs."""
        if self.provider is None:
            raise ValueError("EmbeddingSimilaritySelector needs an embedding provider")
        chosen = []
        for document, cand_set in X:
            doc_emb = self.provider.matrix(list(document.tokens))
            cand_embs = [self.provider.matrix(list(c.text_tokens)) for c in cand_set.candidates]
            chosen.append(unsupervised_select(doc_emb, cand_embs))
        return np.array(chosen)
