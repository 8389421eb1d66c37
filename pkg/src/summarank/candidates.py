"""Candidate-summary set construction for every selection scenario.

Four constructors cover the pipeline: extractive enumeration over document
sentences, beam-output ingestion for single-system reranking, per-system
pooling for summary-level combination, and sentence-level fusion with
tri-gram blocking.  attach_rouge scores a set against a reference and sorts
it, which every trainer and oracle downstream relies on.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from itertools import combinations

from .rouge import RougeTriple, ngrams, rouge_triple
from .textproc import Document

ORIGINS = (
    "enumeration",
    "beam",
    "multi_system_summary",
    "multi_system_sentence",
    "external",
)


@dataclass(frozen=True)
class Candidate:
    """One candidate summary with provenance."""

    text_tokens: tuple[str, ...]
    system_tag: str
    sentence_indices: tuple[int, ...] | None = None
    rouge_vs_ref: RougeTriple | None = None

    def __post_init__(self):
        if not self.text_tokens:
            raise ValueError("candidate has no tokens")
        if self.sentence_indices is not None:
            idx = self.sentence_indices
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError("sentence indices must be strictly increasing")


@dataclass(frozen=True)
class CandidateSet:
    doc_id: str
    candidates: tuple[Candidate, ...]
    origin: str

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        if not self.candidates:
            raise ValueError("candidate set is empty")

    def __len__(self):
        return len(self.candidates)


@dataclass(frozen=True)
class SentenceRanking:
    """One score per document sentence; higher means keep."""

    scores: tuple[float, ...]


def _dedup(candidates) -> tuple[Candidate, ...]:
    seen = set()
    kept = []
    for cand in candidates:
        if cand.text_tokens not in seen:
            seen.add(cand.text_tokens)
            kept.append(cand)
    return tuple(kept)


def heuristic_ranking(doc: Document, reference=None, token_counts: Counter | None = None) -> SentenceRanking:
    """Rank document sentences for pruning.

    With a reference, runs a greedy oracle: repeatedly add the sentence whose
    addition most improves mean-F ROUGE of the selected set, and score each
    sentence by its selection order reversed.  Without a reference, scores a
    sentence by the summed inverse frequency of its tokens; counts default to
    the document itself but corpus-level counts can be supplied.  Both modes
    are fallbacks for an externally supplied ranking.
    """
    n = len(doc.sentences)
    if reference:
        reference = list(reference)
        order = []
        remaining = list(range(n))
        selected_tokens: list[str] = []
        best_f = 0.0
        while remaining:
            best_idx = None
            best_gain = None
            for i in remaining:
                trial = selected_tokens + list(doc.sentences[i].tokens)
                gain = rouge_triple(trial, reference).mean_f - best_f
                if best_gain is None or gain > best_gain:
                    best_gain = gain
                    best_idx = i
            order.append(best_idx)
            remaining.remove(best_idx)
            selected_tokens.extend(doc.sentences[best_idx].tokens)
            best_f += best_gain
        scores = [0.0] * n
        for position, idx in enumerate(order):
            scores[idx] = float(n - position)
        return SentenceRanking(scores=tuple(scores))

    counts = token_counts if token_counts is not None else Counter(doc.tokens)
    scores = tuple(
        sum(1.0 / counts[t] for t in s.tokens if counts[t] > 0) for s in doc.sentences
    )
    return SentenceRanking(scores=scores)


def enumerate_extractive(
    doc: Document,
    ranking: SentenceRanking,
    sizes=(2, 3),
    top_n: int = 5,
    cap: int = 20,
) -> CandidateSet:
    """Enumerate sentence combinations of the top-ranked sentences.

    Keeps the top_n sentences by ranking score (ties to the lower index),
    emits every combination whose size is in `sizes` rendered in document
    order, and prunes to `cap` by highest summed sentence score with a
    lexicographic index-tuple tie-break.
    """
    sizes = sorted(set(int(s) for s in sizes))
    if not sizes or sizes[0] < 1:
        raise ValueError("sizes must contain positive integers")
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if top_n < sizes[-1]:
        raise ValueError("top_n must be at least the largest combination size")
    n = len(doc.sentences)
    if len(ranking.scores) != n:
        raise ValueError("ranking length does not match sentence count")
    if n < sizes[0]:
        raise ValueError("document too short")

    by_score = sorted(range(n), key=lambda i: (-ranking.scores[i], i))
    retained = sorted(by_score[: min(top_n, n)])

    combos = []
    for size in sizes:
        for combo in combinations(retained, size):
            combos.append(combo)
    combos.sort(key=lambda c: (-sum(ranking.scores[i] for i in c), c))
    combos = combos[:cap]
    combos.sort()

    candidates = []
    for combo in combos:
        tokens = tuple(t for i in combo for t in doc.sentences[i].tokens)
        tag = "enum:" + "+".join(str(i) for i in combo)
        candidates.append(
            Candidate(text_tokens=tokens, system_tag=tag, sentence_indices=tuple(combo))
        )
    return CandidateSet(doc_id=doc.doc_id, candidates=_dedup(candidates), origin="enumeration")


def ingest_beam(outputs, beam_size: int, doc_id: str = "") -> CandidateSet:
    """Keep the first `beam_size` beam outputs, ordered by rank.

    `outputs` is a list of (rank, token list) pairs with unique ranks.
    """
    if not outputs:
        raise ValueError("no beam outputs")
    ranks = [r for r, _ in outputs]
    if len(set(ranks)) != len(ranks):
        raise ValueError("beam ranks must be unique")
    ordered = sorted(outputs, key=lambda rt: rt[0])[:beam_size]
    candidates = [
        Candidate(text_tokens=tuple(tokens), system_tag=f"beam:{rank}")
        for rank, tokens in ordered
    ]
    return CandidateSet(doc_id=doc_id, candidates=_dedup(candidates), origin="beam")


def pool_systems(per_system, doc_id: str = "") -> CandidateSet:
    """One candidate per system; duplicates keep the first system's tag."""
    if len(per_system) < 2:
        raise ValueError("nothing to combine")
    candidates = [
        Candidate(text_tokens=tuple(tokens), system_tag=tag) for tag, tokens in per_system
    ]
    return CandidateSet(
        doc_id=doc_id, candidates=_dedup(candidates), origin="multi_system_summary"
    )


def _shares_trigram(a, b) -> bool:
    a_grams = set(ngrams(a, 3))
    if not a_grams:
        return False
    return any(g in a_grams for g in ngrams(b, 3))


def fuse_sentences(per_system_sentences, m: int = 3, doc_id: str = "") -> CandidateSet:
    """Fuse sentences pooled across systems into m-sentence candidates.

    Exact duplicate sentences are merged first.  Every m-subset of the pool is
    rendered in pool order, then any candidate in which two sentences share an
    identical tri-gram is blocked.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    pool = []
    seen = set()
    for sent in per_system_sentences:
        key = tuple(sent)
        if key and key not in seen:
            seen.add(key)
            pool.append(key)
    if len(pool) < m:
        raise ValueError(f"sentence pool smaller than {m}")

    candidates = []
    for combo in combinations(range(len(pool)), m):
        members = [pool[i] for i in combo]
        blocked = any(
            _shares_trigram(members[a], members[b])
            for a in range(m)
            for b in range(a + 1, m)
        )
        if blocked:
            continue
        tokens = tuple(t for s in members for t in s)
        tag = "fuse:" + "+".join(str(i) for i in combo)
        candidates.append(Candidate(text_tokens=tokens, system_tag=tag))
    if not candidates:
        raise ValueError("tri-gram blocking removed every candidate")
    return CandidateSet(
        doc_id=doc_id, candidates=_dedup(candidates), origin="multi_system_sentence"
    )


def attach_rouge(cand_set: CandidateSet, reference, key: str = "mean_f") -> CandidateSet:
    """Score every candidate against the reference and sort descending.

    The sort key is the mean F1 over ROUGE-1/2/L by default ("mean_f"), or
    ROUGE-1 F1 alone ("r1").  The sort is stable, so equal scores preserve the
    original candidate order.
    """
    if key not in ("mean_f", "r1"):
        raise ValueError(f"unknown sort key {key!r}")
    reference = list(reference)
    if not reference:
        raise ValueError("empty reference")
    scored = [
        replace(c, rouge_vs_ref=rouge_triple(c.text_tokens, reference))
        for c in cand_set.candidates
    ]
    sort_value = (
        (lambda c: c.rouge_vs_ref.mean_f) if key == "mean_f" else (lambda c: c.rouge_vs_ref.r1.f1)
    )
    scored.sort(key=lambda c: -sort_value(c))
    return replace(cand_set, candidates=tuple(scored))
