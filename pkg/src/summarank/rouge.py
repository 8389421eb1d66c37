"""Exact ROUGE-1/2/L over token lists.

ROUGE-N uses clipped n-gram counts; ROUGE-L uses a sentence-agnostic longest
common subsequence computed by dynamic programming.  No stemming, no stopword
removal.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class RougeTriple:
    """ROUGE-1/2/L for one candidate/reference pair plus the mean F."""

    r1: RougeScore
    r2: RougeScore
    rl: RougeScore
    mean_f: float


def _score(overlap: float, cand_count: int, ref_count: int) -> RougeScore:
    precision = overlap / cand_count if cand_count else 0.0
    recall = overlap / ref_count if ref_count else 0.0
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return RougeScore(precision=precision, recall=recall, f1=f1)


def ngrams(tokens, k: int) -> list[tuple]:
    """All k-grams of a token list, in order, with multiplicity."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    tokens = list(tokens)
    return [tuple(tokens[i : i + k]) for i in range(len(tokens) - k + 1)]


def rouge_n(candidate, reference, n: int) -> RougeScore:
    """Clipped n-gram overlap ROUGE between a candidate and one reference."""
    if not reference:
        raise ValueError("empty reference")
    cand_grams = Counter(ngrams(candidate, n))
    ref_grams = Counter(ngrams(reference, n))
    overlap = sum(min(cand_grams[g], ref_grams[g]) for g in cand_grams)
    return _score(overlap, sum(cand_grams.values()), sum(ref_grams.values()))


def _lcs_length(a, b) -> int:
    dp = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a)):
        for j in range(len(b)):
            if a[i] == b[j]:
                dp[i + 1][j + 1] = dp[i][j] + 1
            else:
                dp[i + 1][j + 1] = max(dp[i][j + 1], dp[i + 1][j])
    return dp[len(a)][len(b)]


def rouge_l(candidate, reference) -> RougeScore:
    """LCS-based ROUGE; an empty candidate scores zero."""
    if not reference:
        raise ValueError("empty reference")
    candidate = list(candidate)
    reference = list(reference)
    if not candidate:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(candidate, reference)
    return _score(lcs, len(candidate), len(reference))


def rouge_triple(candidate, reference) -> RougeTriple:
    """ROUGE-1/2/L plus their mean F1, the default candidate sort key."""
    r1 = rouge_n(candidate, reference, 1)
    r2 = rouge_n(candidate, reference, 2)
    rl = rouge_l(candidate, reference)
    return RougeTriple(r1=r1, r2=r2, rl=rl, mean_f=(r1.f1 + r2.f1 + rl.f1) / 3.0)
