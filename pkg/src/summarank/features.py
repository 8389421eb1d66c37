"""Hand-crafted document/candidate features for the linear ranking baseline.

The extractive-fragment features follow the greedy longest-match
factorization of a candidate against its document: at each candidate
position take the longest span that appears verbatim anywhere in the
document (earliest document position on ties), else advance one token.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .candidates import Candidate
from .rouge import ngrams, rouge_l, rouge_n
from .textproc import Document

SENTENCE_TERMINATORS = {".", "!", "?"}


@dataclass(frozen=True)
class Fragment:
    cand_start: int
    doc_start: int
    length: int


@dataclass(frozen=True)
class FeatureVector:
    doc_len: float
    cand_len: float
    rouge1_dc: float
    rouge2_dc: float
    rougeL_dc: float
    copy_len: float
    frag_coverage: float
    frag_density: float
    compression: float
    novelty_1: float
    novelty_2: float
    novelty_3: float
    novelty_4: float
    repetition_1: float
    repetition_2: float
    repetition_3: float
    repetition_4: float
    fusion_ratio: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)


FEATURE_NAMES = tuple(f.name for f in fields(FeatureVector))


def greedy_fragments(cand_tokens, doc_tokens) -> list[Fragment]:
    """Greedy longest-match factorization of the candidate against the document."""
    cand = list(cand_tokens)
    doc = list(doc_tokens)
    positions: dict[str, list[int]] = {}
    for pos, tok in enumerate(doc):
        positions.setdefault(tok, []).append(pos)

    out = []
    i = 0
    while i < len(cand):
        best_len = 0
        best_pos = -1
        for p in positions.get(cand[i], ()):
            length = 0
            while (
                i + length < len(cand)
                and p + length < len(doc)
                and cand[i + length] == doc[p + length]
            ):
                length += 1
            if length > best_len:
                best_len = length
                best_pos = p
        if best_len > 0:
            out.append(Fragment(cand_start=i, doc_start=best_pos, length=best_len))
            i += best_len
        else:
            i += 1
    return out


def split_candidate_sentences(tokens) -> list[list[str]]:
    """Re-split candidate tokens into sentences at terminator tokens."""
    sentences = []
    current: list[str] = []
    tokens = list(tokens)
    for idx, tok in enumerate(tokens):
        current.append(tok)
        is_term = tok in SENTENCE_TERMINATORS
        next_is_term = idx + 1 < len(tokens) and tokens[idx + 1] in SENTENCE_TERMINATORS
        if is_term and not next_is_term:
            sentences.append(current)
            current = []
    if current:
        sentences.append(current)
    return sentences


def _novelty(cand_tokens, doc_tokens, k: int) -> float:
    grams = ngrams(cand_tokens, k)
    if not grams:
        return 0.0
    doc_grams = set(ngrams(doc_tokens, k))
    novel = sum(1 for g in grams if g not in doc_grams)
    return novel / len(grams)


def _repetition(cand_tokens, k: int) -> float:
    grams = ngrams(cand_tokens, k)
    if not grams:
        return 0.0
    return 1.0 - len(set(grams)) / len(grams)


def _doc_sentence_of(doc: Document):
    """Map flat token positions to sentence indices."""
    owner = []
    for sent in doc.sentences:
        owner.extend([sent.index] * len(sent.tokens))
    return owner


def extract_features(doc: Document, candidate: Candidate) -> FeatureVector:
    cand_tokens = list(candidate.text_tokens)
    if not cand_tokens:
        raise ValueError("empty candidate")
    doc_tokens = list(doc.tokens)

    fragments = greedy_fragments(cand_tokens, doc_tokens)
    frag_lengths = [f.length for f in fragments]
    cand_len = len(cand_tokens)
    coverage = sum(frag_lengths) / cand_len
    density = sum(l * l for l in frag_lengths) / cand_len
    copy_len = max(frag_lengths, default=0)

    owner = _doc_sentence_of(doc)
    cand_sentences = split_candidate_sentences(cand_tokens)
    fused = 0
    for sent in cand_sentences:
        sources = set()
        for frag in greedy_fragments(sent, doc_tokens):
            sources.update(owner[frag.doc_start : frag.doc_start + frag.length])
        if len(sources) >= 2:
            fused += 1
    fusion_ratio = fused / len(cand_sentences)

    return FeatureVector(
        doc_len=float(len(doc_tokens)),
        cand_len=float(cand_len),
        rouge1_dc=rouge_n(cand_tokens, doc_tokens, 1).f1,
        rouge2_dc=rouge_n(cand_tokens, doc_tokens, 2).f1,
        rougeL_dc=rouge_l(cand_tokens, doc_tokens).f1,
        copy_len=float(copy_len),
        frag_coverage=coverage,
        frag_density=density,
        compression=len(doc_tokens) / cand_len,
        novelty_1=_novelty(cand_tokens, doc_tokens, 1),
        novelty_2=_novelty(cand_tokens, doc_tokens, 2),
        novelty_3=_novelty(cand_tokens, doc_tokens, 3),
        novelty_4=_novelty(cand_tokens, doc_tokens, 4),
        repetition_1=_repetition(cand_tokens, 1),
        repetition_2=_repetition(cand_tokens, 2),
        repetition_3=_repetition(cand_tokens, 3),
        repetition_4=_repetition(cand_tokens, 4),
        fusion_ratio=fusion_ratio,
    )


def features_to_csv(rows: list[tuple[str, FeatureVector]]) -> str:
    """CSV dump with the canonical 18 column names plus a leading id column."""
    lines = ["id," + ",".join(FEATURE_NAMES)]
    for row_id, vec in rows:
        values = ",".join(repr(v) for v in vec.as_array())
        lines.append(f"{row_id},{values}")
    return "\n".join(lines) + "\n"
