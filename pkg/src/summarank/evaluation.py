"""Oracles, corpus reporting, bin/success-rate analysis, selection-accuracy
buckets, and paired significance testing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .candidates import CandidateSet
from .rouge import RougeTriple


@dataclass(frozen=True)
class SelectionRecord:
    doc_id: str
    method_tag: str
    chosen_index: int
    chosen: RougeTriple
    per_candidate: tuple[RougeTriple, ...]
    candidate_tags: tuple[str, ...] | None = None
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0 <= self.chosen_index < len(self.per_candidate):
            raise ValueError("chosen index out of range")
        if self.per_candidate[self.chosen_index] != self.chosen:
            raise ValueError("chosen triple does not match the candidate list")


def _triples(cand_set: CandidateSet) -> tuple[RougeTriple, ...]:
    triples = tuple(c.rouge_vs_ref for c in cand_set.candidates)
    if any(t is None for t in triples):
        raise ValueError("candidates lack ROUGE scores; run attach_rouge first")
    return triples


def oracle_select(cand_set: CandidateSet, which: str, seed: int = 0) -> SelectionRecord:
    """Min/Max/Random oracle over a ROUGE-scored candidate set.

    Min and Max use mean-F with lowest-index ties; Random draws uniformly
    from the seeded generator.  The per-candidate scores recorded alongside
    reproduce the same choice under argmax, so downstream analyses can
    re-select within any candidate subset.
    """
    which = which.lower()
    triples = _triples(cand_set)
    values = np.array([t.mean_f for t in triples])
    if which == "max":
        scores = values
    elif which == "min":
        scores = -values
    elif which == "random":
        rng = np.random.default_rng(seed)
        scores = rng.random(len(values))
    else:
        raise ValueError(f"unknown oracle {which!r}")
    chosen = int(np.argmax(scores))
    return SelectionRecord(
        doc_id=cand_set.doc_id,
        method_tag=f"oracle-{which}",
        chosen_index=chosen,
        chosen=triples[chosen],
        per_candidate=triples,
        candidate_tags=tuple(c.system_tag for c in cand_set.candidates),
        scores=tuple(float(s) for s in scores),
    )


@dataclass(frozen=True)
class CorpusReport:
    """Per-method corpus means of ROUGE F1, scaled by 100."""

    rows: tuple[tuple[str, float, float, float], ...]   # (method, r1, r2, rl)
    n_docs: int

    def to_text(self) -> str:
        header = f"{'Method':<20} {'R-1':>7} {'R-2':>7} {'R-L':>7}"
        lines = [header, "-" * len(header)]
        for method, r1, r2, rl in self.rows:
            lines.append(f"{method:<20} {r1:>7.2f} {r2:>7.2f} {rl:>7.2f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["method,r1,r2,rl"]
        for method, r1, r2, rl in self.rows:
            lines.append(f"{method},{r1:.2f},{r2:.2f},{rl:.2f}")
        return "\n".join(lines) + "\n"


def corpus_report(records_by_method: dict[str, list[SelectionRecord]]) -> CorpusReport:
    """Mean R-1/R-2/R-L of the chosen candidates, one row per method."""
    if not records_by_method:
        raise ValueError("no selection records")
    doc_sets = {
        method: frozenset(r.doc_id for r in records)
        for method, records in records_by_method.items()
    }
    all_ids = frozenset().union(*doc_sets.values())
    missing = {
        method: sorted(all_ids - ids) for method, ids in doc_sets.items() if ids != all_ids
    }
    if missing:
        detail = "; ".join(f"{m}: {ids}" for m, ids in sorted(missing.items()))
        raise ValueError(f"methods do not cover the same doc_ids ({detail})")

    rows = []
    n_docs = 0
    for method, records in records_by_method.items():
        n_docs = len(records)
        r1 = 100.0 * float(np.mean([r.chosen.r1.f1 for r in records]))
        r2 = 100.0 * float(np.mean([r.chosen.r2.f1 for r in records]))
        rl = 100.0 * float(np.mean([r.chosen.rl.f1 for r in records]))
        rows.append((method, r1, r2, rl))
    return CorpusReport(rows=tuple(rows), n_docs=n_docs)


@dataclass(frozen=True)
class BinReport:
    lower: float
    upper: float
    tags: tuple[str, ...]
    mean_max: float
    mean_min: float
    mean_random: float
    mean_best_single: float
    mean_method: float


def bin_analysis(
    per_doc: dict[str, list[float]],
    width: float,
    selector,
    system_means: dict[str, float] | None = None,
    seed: int = 0,
):
    """Group systems into equal-width bins by mean score and re-select per bin.

    `per_doc` maps a system tag to its per-document ROUGE-1 values (aligned
    document order across systems).  Bins are [b, b + width) anchored at
    floor(min_mean / width) * width, and only bins holding at least two
    systems are evaluated.  `selector(tags, doc_idx)` returns the tag the
    method picks among a bin's systems for one document.

    Returns (list of BinReport, success_rate) where success_rate is the
    fraction of evaluated bins whose method mean beats the best single
    system's mean.
    """
    if width <= 0:
        raise ValueError("bin width must be positive")
    tags = sorted(per_doc)
    if not tags:
        raise ValueError("nothing to combine")
    n_docs = len(per_doc[tags[0]])
    if any(len(per_doc[t]) != n_docs for t in tags):
        raise ValueError("systems cover different document counts")
    means = system_means or {t: float(np.mean(per_doc[t])) for t in tags}

    anchor = math.floor(min(means[t] for t in tags) / width) * width
    bins: dict[int, list[str]] = {}
    for tag in tags:
        k = int(math.floor((means[tag] - anchor) / width))
        bins.setdefault(k, []).append(tag)

    reports = []
    successes = 0
    for k in sorted(bins):
        members = bins[k]
        if len(members) < 2:
            continue
        table = np.array([per_doc[t] for t in members])   # (n_sys, n_docs)
        rng = np.random.default_rng([seed, k])
        random_rows = rng.integers(0, len(members), size=n_docs)
        method_values = []
        for d in range(n_docs):
            pick = selector(members, d)
            if pick not in members:
                raise ValueError(f"selector returned unknown tag {pick!r}")
            method_values.append(per_doc[pick][d])
        best_single = max(float(np.mean(per_doc[t])) for t in members)
        report = BinReport(
            lower=anchor + k * width,
            upper=anchor + (k + 1) * width,
            tags=tuple(members),
            mean_max=float(table.max(axis=0).mean()),
            mean_min=float(table.min(axis=0).mean()),
            mean_random=float(np.mean([table[random_rows[d], d] for d in range(n_docs)])),
            mean_best_single=best_single,
            mean_method=float(np.mean(method_values)),
        )
        if report.mean_method > report.mean_best_single:
            successes += 1
        reports.append(report)

    if not reports:
        raise ValueError("nothing to combine")
    return reports, successes / len(reports)


def max_oracle_selector(per_doc: dict[str, list[float]]):
    """Bin selector picking the per-document best system."""

    def pick(tags, doc_idx):
        values = [per_doc[t][doc_idx] for t in tags]
        return tags[int(np.argmax(values))]

    return pick


def score_table_selector(score_table: dict[str, list[float]]):
    """Bin selector replaying a method's stored per-system scores."""

    def pick(tags, doc_idx):
        values = [score_table[t][doc_idx] for t in tags]
        return tags[int(np.argmax(values))]

    return pick


@dataclass(frozen=True)
class BucketAccuracy:
    lower: float
    upper: float
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total


DEFAULT_BUCKET_EDGES = (0.0, 0.02, 0.05, 0.1, 0.2, 1.0)


def selection_accuracy(pairs, bucket_edges=DEFAULT_BUCKET_EDGES) -> list[BucketAccuracy]:
    """Per-bucket accuracy of picking the better of two candidates.

    `pairs` holds (delta, correct) per document, where delta is the absolute
    mean-F gap between the two candidates; exact ties must already be
    excluded.  Bucket (lo, hi] membership uses lo < delta <= hi, and empty
    buckets are omitted from the result.
    """
    edges = list(bucket_edges)
    if edges != sorted(edges) or len(set(edges)) != len(edges):
        raise ValueError("bucket edges must be strictly increasing")
    buckets = [[0, 0] for _ in range(len(edges) - 1)]
    for delta, correct in pairs:
        if delta <= 0:
            raise ValueError("pairs must have positive deltas (ties excluded)")
        for b in range(len(edges) - 1):
            if edges[b] < delta <= edges[b + 1]:
                buckets[b][1] += 1
                if correct:
                    buckets[b][0] += 1
                break
    return [
        BucketAccuracy(lower=edges[b], upper=edges[b + 1], correct=c, total=t)
        for b, (c, t) in enumerate(buckets)
        if t > 0
    ]


def significance(per_doc_a, per_doc_b, trials: int = 10000, seed: int = 0) -> float:
    """Paired two-sided approximate randomization p-value.

    p is the fraction of sampled sign-flip patterns (plus the identity)
    whose absolute mean difference is at least the observed one.
    """
    a = np.asarray(per_doc_a, dtype=float)
    b = np.asarray(per_doc_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("need two equal-length score lists with at least two entries")
    diffs = a - b
    observed = abs(diffs.mean())
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(trials, len(diffs))) * 2 - 1
    sampled = np.abs((signs * diffs).mean(axis=1))
    hits = int((sampled >= observed).sum())
    return (1 + hits) / (trials + 1)


def exact_significance(per_doc_a, per_doc_b) -> float:
    """Exhaustive sign-flip enumeration; feasible for short score lists."""
    a = np.asarray(per_doc_a, dtype=float)
    b = np.asarray(per_doc_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("need two equal-length score lists with at least two entries")
    if len(a) > 20:
        raise ValueError("exact enumeration is limited to 20 documents")
    diffs = a - b
    observed = abs(diffs.mean())
    n = len(diffs)
    hits = 0
    for pattern in range(2**n):
        signs = np.array([1 if pattern & (1 << i) else -1 for i in range(n)])
        if abs((signs * diffs).mean()) >= observed:
            hits += 1
    return hits / 2**n
