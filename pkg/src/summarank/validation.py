"""Input validation helpers shared by the estimators."""

from __future__ import annotations

from .candidates import CandidateSet
from .textproc import Document
from .training import TrainExample


def as_train_examples(X) -> list[TrainExample]:
    """Normalize fit input to TrainExample objects.

    Accepts TrainExample instances, (document, candidate_set) pairs, or
    (document, reference, candidate_set) triples.
    """
    out = []
    for item in X:
        if isinstance(item, TrainExample):
            out.append(item)
        elif isinstance(item, (tuple, list)) and len(item) == 2:
            document, cand_set = item
            out.append(TrainExample(document=document, reference=None, candidates=cand_set))
        elif isinstance(item, (tuple, list)) and len(item) == 3:
            document, reference, cand_set = item
            out.append(
                TrainExample(
                    document=document,
                    reference=tuple(reference) if reference else None,
                    candidates=cand_set,
                )
            )
        else:
            raise ValueError(
                "expected TrainExample or (document, [reference,] candidate_set) items"
            )
    for example in out:
        if not isinstance(example.document, Document):
            raise ValueError("first element must be a Document")
        if not isinstance(example.candidates, CandidateSet):
            raise ValueError("candidate element must be a CandidateSet")
        if example.document.doc_id != example.candidates.doc_id:
            raise ValueError(
                f"document {example.document.doc_id!r} paired with candidate set "
                f"{example.candidates.doc_id!r}"
            )
    return out


def as_selection_pairs(X) -> list[tuple[Document, CandidateSet]]:
    """Normalize predict input to (Document, CandidateSet) pairs."""
    return [(e.document, e.candidates) for e in as_train_examples(X)]
