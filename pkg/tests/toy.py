"""Tiny deterministic news-like corpus for CLI and end-to-end tests."""

from __future__ import annotations

import json

import numpy as np

NOUNS = ["market", "mayor", "river", "garden", "team", "bridge", "school", "artist",
         "library", "harbor", "festival", "council"]
VERBS = ["opened", "closed", "visited", "repaired", "painted", "celebrated", "funded"]
PLACES = ["downtown", "uptown", "riverside", "midtown"]
DAYS = ["monday", "tuesday", "friday", "sunday"]


def _sentence(rng) -> str:
    return (
        f"The {rng.choice(NOUNS)} {rng.choice(VERBS)} the "
        f"{rng.choice(NOUNS)} {rng.choice(PLACES)} on {rng.choice(DAYS)}."
    )


def make_toy_dataset(n_docs: int = 8, seed: int = 0) -> list[dict]:
    """Documents with references and two synthetic systems' beam outputs.

    Beam outputs degrade in reference overlap with rank, so candidate sets
    carry a meaningful ROUGE ordering.
    """
    rng = np.random.default_rng(seed)
    records = []
    for d in range(n_docs):
        sentences = [_sentence(rng) for _ in range(5)]
        reference = sentences[0] + " " + sentences[2]
        ref_words = (sentences[0] + " " + sentences[2]).split()

        def degraded(keep: float, tag: str) -> str:
            kept = [w for w in ref_words if rng.random() < keep]
            if not kept:
                kept = [ref_words[0]]
            return " ".join(kept) + f" {tag}."

        systems = {}
        for tag in ("alpha", "bravo"):
            systems[tag] = [
                sentences[0] + " " + sentences[2],
                degraded(0.85, tag),
                degraded(0.6, tag),
                degraded(0.3, tag),
            ]
        # the exact-reference top output alternates between systems, so the
        # per-document winner genuinely disagrees across the corpus
        loser = "bravo" if d % 2 == 0 else "alpha"
        systems[loser][0] = degraded(0.8, loser)
        records.append(
            {
                "doc_id": f"doc{d}",
                "sentences": sentences,
                "reference": reference,
                "systems": systems,
            }
        )
    return records


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
