"""Margin ranking-loss training with a warmup learning-rate schedule.

Candidates arrive sorted descending by ROUGE (attach_rouge).  Every ordered
pair contributes a hinge whose margin grows with the rank gap, so better
candidates are pushed above worse ones by an amount proportional to how far
apart they rank.  Optimization is adaptive-moment gradient descent under an
inverse-square-root schedule with linear warmup, and the checkpoint returned
is the one with the best validation performance (mean ROUGE of the selected
candidate on a held-out split).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidateSet
from .embeddings import embed_candidate, embed_document
from .matching import cand_backward, cand_forward, doc_backward, doc_forward
from .textproc import Document
from .weighting import ScorerParams, zero_grads


@dataclass(frozen=True)
class TrainConfig:
    rank_margin: float = 0.01          # margin added per rank gap
    warmup_steps: int = 10000
    lr_scale: float = 0.002
    max_steps: int = 200
    batch_size: int = 8
    seed: int = 0
    eval_every: int = 50
    optimizer_betas: tuple[float, float] = (0.9, 0.999)
    optimizer_eps: float = 1e-8
    mode: str = "supervised"           # pretrain | finetune | supervised
    val_fraction: float = 0.2

    def __post_init__(self):
        if self.rank_margin < 0:
            raise ValueError("rank_margin must be nonnegative")
        if self.warmup_steps < 1:
            raise ValueError("warmup_steps must be at least 1")
        if self.lr_scale <= 0:
            raise ValueError("lr_scale must be positive")
        if self.mode not in ("pretrain", "finetune", "supervised"):
            raise ValueError(f"unknown training mode {self.mode!r}")


@dataclass(frozen=True)
class LossReport:
    loss: float
    violated_pairs: int
    total_pairs: int


@dataclass(frozen=True)
class TrainExample:
    document: Document
    reference: tuple[str, ...] | None
    candidates: CandidateSet


@dataclass
class TrainState:
    params: ScorerParams
    moments_m: dict[str, np.ndarray]
    moments_v: dict[str, np.ndarray]
    step: int
    best_validation: float
    rng: np.random.Generator
    log: list[dict] = field(default_factory=list)


def ranking_loss(scores, rank_margin: float = 0.01) -> LossReport:
    """Hinge loss over all ordered pairs of ROUGE-sorted candidate scores.

    `scores` must follow the descending-ROUGE candidate order; pair (i, j)
    with j > i contributes max(0, score_j - score_i + (j - i) * rank_margin).
    """
    scores = list(scores)
    n = len(scores)
    if n < 2:
        return LossReport(loss=0.0, violated_pairs=0, total_pairs=0)
    loss = 0.0
    violated = 0
    total = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += 1
            term = scores[j] - scores[i] + (j - i) * rank_margin
            if term > 0:
                loss += term
                violated += 1
    return LossReport(loss=loss, violated_pairs=violated, total_pairs=total)


def ranking_loss_grad(scores, rank_margin: float):
    """Loss value plus d(loss)/d(score_i) for each candidate."""
    scores = np.asarray(scores, dtype=float)
    n = len(scores)
    grad = np.zeros(n)
    loss = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            term = scores[j] - scores[i] + (j - i) * rank_margin
            if term > 0:
                loss += term
                grad[j] += 1.0
                grad[i] -= 1.0
    return loss, grad


def lr_at(step: int, config: TrainConfig) -> float:
    """Inverse-square-root schedule with linear warmup; peaks at warmup_steps."""
    if step < 1:
        raise ValueError("step must be at least 1")
    return config.lr_scale * min(step**-0.5, step * config.warmup_steps**-1.5)


def _adam_update(state: TrainState, grads, lr: float, config: TrainConfig):
    b1, b2 = config.optimizer_betas
    eps = config.optimizer_eps
    t = state.step
    for name, tensor in state.params.tensors.items():
        g = grads[name]
        m = state.moments_m[name]
        v = state.moments_v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        tensor -= lr * m_hat / (np.sqrt(v_hat) + eps)


def _require_rouge(example: TrainExample):
    if any(c.rouge_vs_ref is None for c in example.candidates.candidates):
        raise ValueError(
            f"candidates for {example.document.doc_id!r} lack ROUGE scores; run attach_rouge first"
        )


def _document_loss(example: TrainExample, params: ScorerParams, provider, grads, config: TrainConfig, scale: float):
    """Forward and backward over one document's full candidate list."""
    doc_raw = embed_document(example.document.tokens, provider, params)
    doc = doc_forward(doc_raw, params)
    cands = []
    for cand in example.candidates.candidates:
        cand_raw = embed_candidate(cand.text_tokens, provider, params)
        cands.append(cand_forward(doc, cand_raw, params))
    scores = [c.breakdown.score for c in cands]
    loss, dscores = ranking_loss_grad(scores, config.rank_margin)
    if grads is not None:
        for cand, ds in zip(cands, dscores):
            if ds != 0.0:
                cand_backward(doc, cand, ds * scale, params, grads)
        doc_backward(doc, params, grads)
    return loss


def evaluate_selection(dataset, params: ScorerParams, provider) -> float:
    """Mean ROUGE (mean F over R-1/2/L) of the argmax-score candidate."""
    if not dataset:
        raise ValueError("empty evaluation split")
    total = 0.0
    for example in dataset:
        doc_raw = embed_document(example.document.tokens, provider, params)
        doc = doc_forward(doc_raw, params)
        best_score = None
        best_idx = 0
        for idx, cand in enumerate(example.candidates.candidates):
            cand_raw = embed_candidate(cand.text_tokens, provider, params)
            value = cand_forward(doc, cand_raw, params).breakdown.score
            if best_score is None or value > best_score:
                best_score = value
                best_idx = idx
        total += example.candidates.candidates[best_idx].rouge_vs_ref.mean_f
    return total / len(dataset)


def train(
    dataset,
    config: TrainConfig,
    init: ScorerParams,
    provider,
    val_dataset=None,
) -> TrainState:
    """Train the scorer and return the state whose params did best on validation.

    `dataset` is a list of TrainExample with ROUGE attached.  When no explicit
    validation split is given, the tail `val_fraction` of the dataset is held
    out.  Fully deterministic given (dataset, config, init, provider).
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("empty training dataset")
    for example in dataset:
        _require_rouge(example)
    if val_dataset is None:
        n_val = max(1, int(round(len(dataset) * config.val_fraction)))
        if n_val >= len(dataset):
            raise ValueError("validation split leaves no training documents")
        val_dataset = dataset[-n_val:]
        dataset = dataset[:-n_val]
    else:
        val_dataset = list(val_dataset)
        for example in val_dataset:
            _require_rouge(example)

    params = init.copy()
    params.validate()
    state = TrainState(
        params=params,
        moments_m=zero_grads(params),
        moments_v=zero_grads(params),
        step=0,
        best_validation=-math.inf,
        rng=np.random.default_rng(config.seed),
    )
    best_params = params.copy()
    order: list[int] = []

    while state.step < config.max_steps:
        while len(order) < config.batch_size:
            order.extend(int(i) for i in state.rng.permutation(len(dataset)))
        batch = [dataset[order.pop(0)] for _ in range(config.batch_size)]

        state.step += 1
        grads = zero_grads(params)
        scale = 1.0 / len(batch)
        batch_loss = 0.0
        for example in batch:
            batch_loss += _document_loss(example, params, provider, grads, config, scale)
        batch_loss /= len(batch)
        if not math.isfinite(batch_loss):
            raise ValueError(f"training diverged (non-finite loss) at step {state.step}")

        lr = lr_at(state.step, config)
        _adam_update(state, grads, lr, config)

        record = {"step": state.step, "lr": lr, "loss": batch_loss}
        if state.step % config.eval_every == 0 or state.step == config.max_steps:
            validation = evaluate_selection(val_dataset, params, provider)
            record["validation"] = validation
            if validation > state.best_validation:
                state.best_validation = validation
                best_params = params.copy()
        state.log.append(record)

    state.params = best_params
    return state


@dataclass(frozen=True)
class DistributionReport:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    mean: float
    std: float
    total: int


def distribution_report(sets, bins: int = 20) -> DistributionReport:
    """Histogram of candidate ROUGE-1 F values over [0, 1].

    Run once per corpus split and compare side by side to see how candidate
    quality shifts between splits.
    """
    values = []
    for cand_set in sets:
        for cand in cand_set.candidates:
            if cand.rouge_vs_ref is None:
                raise ValueError("candidates lack ROUGE scores; run attach_rouge first")
            values.append(cand.rouge_vs_ref.r1.f1)
    arr = np.asarray(values, dtype=float)
    counts, edges = np.histogram(arr, bins=bins, range=(0.0, 1.0))
    mean = float(arr.mean()) if len(arr) else 0.0
    std = float(arr.std()) if len(arr) else 0.0
    return DistributionReport(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
        mean=mean,
        std=std,
        total=len(arr),
    )
