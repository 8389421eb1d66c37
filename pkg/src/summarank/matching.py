"""Greedy token-matching similarity between a document and a candidate.

Every document token is matched to its most similar candidate token by
cosine, and vice versa.  The document side is a weighted mean under the
learned token weights; both directions are shifted by +1 and combined
harmonically.  Argmax ties break to the smallest index and zero-norm rows
have cosine 0 against everything.

The backward pass treats each max as locally linear through the recorded
argmax index, giving exact subgradients for the whole score with respect to
every trainable tensor (head, projection, global slot).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import check_matrix, embed_candidate, embed_document
from .weighting import (
    ScorerParams,
    WeightCache,
    WeightVector,
    weights_backward,
    weights_forward,
    zero_grads,
)


@dataclass(frozen=True)
class ScoreBreakdown:
    recall: float
    precision: float
    score: float
    argmax_doc_to_cand: tuple[int, ...]
    argmax_cand_to_doc: tuple[int, ...]


def _cosine_matrix(doc_rows: np.ndarray, cand_rows: np.ndarray):
    doc_norms = np.linalg.norm(doc_rows, axis=1)
    cand_norms = np.linalg.norm(cand_rows, axis=1)
    safe_doc = np.where(doc_norms > 0, doc_norms, 1.0)
    safe_cand = np.where(cand_norms > 0, cand_norms, 1.0)
    cos = (doc_rows @ cand_rows.T) / np.outer(safe_doc, safe_cand)
    cos[doc_norms == 0, :] = 0.0
    cos[:, cand_norms == 0] = 0.0
    return cos, doc_norms, cand_norms


def score(doc_emb: np.ndarray, cand_emb: np.ndarray, weights: WeightVector | np.ndarray) -> ScoreBreakdown:
    """Weighted greedy-matching score between document token rows and a candidate.

    `doc_emb` holds one row per document token (no global slot) and must match
    the weight vector length.
    """
    w = weights.weights if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    doc_emb = check_matrix(doc_emb)
    if cand_emb is None or len(cand_emb) == 0:
        raise ValueError("empty candidate")
    cand_emb = check_matrix(cand_emb, dim=doc_emb.shape[1])
    if len(w) != doc_emb.shape[0]:
        raise ValueError("weight vector length must equal the document token count")

    cos, _, _ = _cosine_matrix(doc_emb, cand_emb)
    j_star = cos.argmax(axis=1)
    i_star = cos.argmax(axis=0)
    row_max = cos[np.arange(cos.shape[0]), j_star]
    col_max = cos[i_star, np.arange(cos.shape[1])]

    w_sum = w.sum()
    recall = float((w * row_max).sum() / w_sum + 1.0)
    precision = float(col_max.mean() + 1.0)
    if recall + precision == 0.0:
        value = 0.0
    else:
        value = 2.0 * recall * precision / (recall + precision)
    return ScoreBreakdown(
        recall=recall,
        precision=precision,
        score=float(value),
        argmax_doc_to_cand=tuple(int(j) for j in j_star),
        argmax_cand_to_doc=tuple(int(i) for i in i_star),
    )


# ---------------------------------------------------------------------------
# differentiable pipeline: raw embeddings -> projection -> weights -> score
# ---------------------------------------------------------------------------


@dataclass
class DocForward:
    """Cached per-document state shared by all of its candidates."""

    raw: np.ndarray                  # (1+k, dim) raw rows, global slot at row 0
    projected: np.ndarray            # (1+k, dim)
    weight_cache: WeightCache
    dproj_accum: np.ndarray = field(init=False)
    dweights_accum: np.ndarray = field(init=False)

    def __post_init__(self):
        self.dproj_accum = np.zeros_like(self.projected)
        self.dweights_accum = np.zeros_like(self.weight_cache.weights)

    @property
    def weights(self) -> np.ndarray:
        return self.weight_cache.weights


@dataclass
class CandForward:
    raw: np.ndarray
    projected: np.ndarray
    cos: np.ndarray
    doc_norms: np.ndarray
    cand_norms: np.ndarray
    j_star: np.ndarray
    i_star: np.ndarray
    breakdown: ScoreBreakdown


def doc_forward(doc_raw: np.ndarray, params: ScorerParams) -> DocForward:
    doc_raw = check_matrix(doc_raw, dim=params.dim)
    proj = params.projection
    projected = doc_raw @ proj if proj is not None else doc_raw
    return DocForward(raw=doc_raw, projected=projected, weight_cache=weights_forward(projected, params))


def cand_forward(doc: DocForward, cand_raw: np.ndarray, params: ScorerParams) -> CandForward:
    if cand_raw is None or len(cand_raw) == 0:
        raise ValueError("empty candidate")
    cand_raw = check_matrix(cand_raw, dim=params.dim)
    proj = params.projection
    projected = cand_raw @ proj if proj is not None else cand_raw
    doc_tokens = doc.projected[1:]
    cos, doc_norms, cand_norms = _cosine_matrix(doc_tokens, projected)
    j_star = cos.argmax(axis=1)
    i_star = cos.argmax(axis=0)
    w = doc.weights
    recall = float((w * cos[np.arange(cos.shape[0]), j_star]).sum() / w.sum() + 1.0)
    precision = float(cos[i_star, np.arange(cos.shape[1])].mean() + 1.0)
    value = 0.0 if recall + precision == 0.0 else 2.0 * recall * precision / (recall + precision)
    breakdown = ScoreBreakdown(
        recall=recall,
        precision=precision,
        score=float(value),
        argmax_doc_to_cand=tuple(int(j) for j in j_star),
        argmax_cand_to_doc=tuple(int(i) for i in i_star),
    )
    return CandForward(
        raw=cand_raw,
        projected=projected,
        cos=cos,
        doc_norms=doc_norms,
        cand_norms=cand_norms,
        j_star=j_star,
        i_star=i_star,
        breakdown=breakdown,
    )


def _cosine_backward(dcos, doc_rows, cand_rows, cos, doc_norms, cand_norms):
    """Gradients of the cosine matrix; zero-norm rows stay at zero gradient."""
    safe_doc = np.where(doc_norms > 0, doc_norms, 1.0)
    safe_cand = np.where(cand_norms > 0, cand_norms, 1.0)
    mask = dcos * np.outer(doc_norms > 0, cand_norms > 0)
    ddoc = (mask / safe_cand[None, :]) @ cand_rows / safe_doc[:, None]
    ddoc -= ((mask * cos).sum(axis=1) / safe_doc**2)[:, None] * doc_rows
    dcand = (mask / safe_doc[:, None]).T @ doc_rows / safe_cand[:, None]
    dcand -= ((mask * cos).sum(axis=0) / safe_cand**2)[:, None] * cand_rows
    return ddoc, dcand


def cand_backward(doc: DocForward, cand: CandForward, dscore: float, params: ScorerParams, grads) -> None:
    """Accumulate one candidate's score gradient.

    Candidate-local parameter gradients (projection via the candidate rows)
    go straight into `grads`; document-side contributions are accumulated on
    the DocForward and flushed once by doc_backward.
    """
    r, p = cand.breakdown.recall, cand.breakdown.precision
    if r + p == 0.0:
        return
    denom = (r + p) ** 2
    dr = dscore * 2.0 * p * p / denom
    dp = dscore * 2.0 * r * r / denom

    k, l = cand.cos.shape
    w = doc.weights
    w_sum = w.sum()
    row_max = cand.cos[np.arange(k), cand.j_star]

    dcos = np.zeros_like(cand.cos)
    np.add.at(dcos, (np.arange(k), cand.j_star), dr * w / w_sum)
    np.add.at(dcos, (cand.i_star, np.arange(l)), dp / l)

    doc.dweights_accum += dr * (row_max - (r - 1.0)) / w_sum

    ddoc_tok, dcand = _cosine_backward(
        dcos, doc.projected[1:], cand.projected, cand.cos, cand.doc_norms, cand.cand_norms
    )
    doc.dproj_accum[1:] += ddoc_tok
    if params.projection is not None:
        grads["projection"] += cand.raw.T @ dcand


def doc_backward(doc: DocForward, params: ScorerParams, grads) -> None:
    """Flush the document-side gradient: weights, head, projection, slot."""
    dprojected = weights_backward(doc.weight_cache, doc.dweights_accum, params, grads)
    dprojected += doc.dproj_accum
    if params.projection is not None:
        grads["projection"] += doc.raw.T @ dprojected
        draw = dprojected @ params.projection.T
    else:
        draw = dprojected
    grads["global_slot"] += draw[0]


def score_gradients(
    doc_raw: np.ndarray, cand_raw: np.ndarray, params: ScorerParams, upstream: float = 1.0
) -> tuple[ScoreBreakdown, dict[str, np.ndarray]]:
    """Gradients of the full score for one candidate w.r.t. every parameter."""
    doc = doc_forward(doc_raw, params)
    cand = cand_forward(doc, cand_raw, params)
    grads = zero_grads(params)
    cand_backward(doc, cand, upstream, params, grads)
    doc_backward(doc, params, grads)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient in parameter {name!r}")
    return cand.breakdown, grads


def select(document, cand_set, params: ScorerParams, provider):
    """Argmax-score candidate index plus every candidate's breakdown."""
    if not cand_set.candidates:
        raise ValueError("candidate set is empty")
    doc_raw = embed_document(document.tokens, provider, params)
    doc = doc_forward(doc_raw, params)
    breakdowns = []
    for cand in cand_set.candidates:
        cand_raw = embed_candidate(cand.text_tokens, provider, params)
        breakdowns.append(cand_forward(doc, cand_raw, params).breakdown)
    scores = [b.score for b in breakdowns]
    chosen = int(np.argmax(scores))
    return chosen, breakdowns
