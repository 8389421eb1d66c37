"""File formats: JSONL datasets/candidates/selections, JSON checkpoints, and
the binary embedding container.

All JSON output is emitted with sorted keys and compact separators so that
identical inputs produce byte-identical files.

Embedding container layout (little-endian):
  8-byte magic "RFEMB\\x00\\x00\\x01", u32 dim, u32 entry count, then per
  entry: u32 id length, UTF-8 id, u32 row count, rows*dim float32 values in
  row-major order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .candidates import Candidate, CandidateSet
from .evaluation import SelectionRecord
from .rouge import RougeScore, RougeTriple
from .textproc import Document, Sentence
from .weighting import ScorerParams

EMBEDDING_MAGIC = b"RFEMB\x00\x00\x01"
CHECKPOINT_VERSION = 1


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# dataset records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetRecord:
    doc_id: str
    sentences: tuple[str, ...]
    reference: str | None
    systems: dict[str, tuple[str, ...]]
    sentence_scores: tuple[float, ...] | None = None


def read_dataset(path) -> list[DatasetRecord]:
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON ({exc})") from exc
            doc_id = raw.get("doc_id")
            if not doc_id:
                raise ValueError(f"{path}:{line_no}: missing doc_id")
            if doc_id in seen:
                raise ValueError(f"{path}:{line_no}: duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
            sentences = raw.get("sentences") or []
            if not sentences:
                raise ValueError(f"{path}:{line_no}: document {doc_id!r} has no sentences")
            systems = {
                tag: tuple(outputs) for tag, outputs in (raw.get("systems") or {}).items()
            }
            scores = raw.get("sentence_scores")
            records.append(
                DatasetRecord(
                    doc_id=doc_id,
                    sentences=tuple(sentences),
                    reference=raw.get("reference"),
                    systems=systems,
                    sentence_scores=tuple(scores) if scores is not None else None,
                )
            )
    return records


# ---------------------------------------------------------------------------
# candidate sets
# ---------------------------------------------------------------------------


def _score_to_json(s: RougeScore) -> dict:
    return {"precision": s.precision, "recall": s.recall, "f1": s.f1}


def _score_from_json(d) -> RougeScore:
    return RougeScore(precision=d["precision"], recall=d["recall"], f1=d["f1"])


def triple_to_json(t: RougeTriple) -> dict:
    return {
        "r1": _score_to_json(t.r1),
        "r2": _score_to_json(t.r2),
        "rl": _score_to_json(t.rl),
        "mean_f": t.mean_f,
    }


def triple_from_json(d) -> RougeTriple:
    return RougeTriple(
        r1=_score_from_json(d["r1"]),
        r2=_score_from_json(d["r2"]),
        rl=_score_from_json(d["rl"]),
        mean_f=d["mean_f"],
    )


def candidate_set_to_json(document: Document, reference, cand_set: CandidateSet) -> str:
    return _dumps(
        {
            "doc_id": cand_set.doc_id,
            "origin": cand_set.origin,
            "doc_sentences": [list(s.tokens) for s in document.sentences],
            "reference": list(reference) if reference else None,
            "candidates": [
                {
                    "tokens": list(c.text_tokens),
                    "system_tag": c.system_tag,
                    "sentence_indices": list(c.sentence_indices)
                    if c.sentence_indices is not None
                    else None,
                    "rouge": triple_to_json(c.rouge_vs_ref) if c.rouge_vs_ref else None,
                }
                for c in cand_set.candidates
            ],
        }
    )


def candidate_set_from_json(line: str):
    """Returns (Document, reference tokens or None, CandidateSet)."""
    raw = json.loads(line)
    sentences = tuple(
        Sentence(index=i, tokens=tuple(toks)) for i, toks in enumerate(raw["doc_sentences"])
    )
    document = Document(doc_id=raw["doc_id"], sentences=sentences)
    reference = tuple(raw["reference"]) if raw.get("reference") else None
    candidates = tuple(
        Candidate(
            text_tokens=tuple(c["tokens"]),
            system_tag=c["system_tag"],
            sentence_indices=tuple(c["sentence_indices"])
            if c.get("sentence_indices") is not None
            else None,
            rouge_vs_ref=triple_from_json(c["rouge"]) if c.get("rouge") else None,
        )
        for c in raw["candidates"]
    )
    cand_set = CandidateSet(doc_id=raw["doc_id"], candidates=candidates, origin=raw["origin"])
    return document, reference, cand_set


def write_candidate_sets(path, entries):
    """entries: iterable of (Document, reference tokens or None, CandidateSet)."""
    with open(path, "w", encoding="utf-8") as fh:
        for document, reference, cand_set in entries:
            fh.write(candidate_set_to_json(document, reference, cand_set) + "\n")


def read_candidate_sets(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(candidate_set_from_json(line))
    return out


# ---------------------------------------------------------------------------
# selection records
# ---------------------------------------------------------------------------


def selection_to_json(record: SelectionRecord) -> str:
    return _dumps(
        {
            "doc_id": record.doc_id,
            "method_tag": record.method_tag,
            "chosen_index": record.chosen_index,
            "chosen_rouge": triple_to_json(record.chosen),
            "candidate_rouge": [triple_to_json(t) for t in record.per_candidate],
            "candidate_tags": list(record.candidate_tags) if record.candidate_tags else None,
            "scores": list(record.scores) if record.scores else None,
        }
    )


def selection_from_json(line: str) -> SelectionRecord:
    raw = json.loads(line)
    return SelectionRecord(
        doc_id=raw["doc_id"],
        method_tag=raw["method_tag"],
        chosen_index=raw["chosen_index"],
        chosen=triple_from_json(raw["chosen_rouge"]),
        per_candidate=tuple(triple_from_json(t) for t in raw["candidate_rouge"]),
        candidate_tags=tuple(raw["candidate_tags"]) if raw.get("candidate_tags") else None,
        scores=tuple(raw["scores"]) if raw.get("scores") else None,
    )


def write_selections(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(selection_to_json(record) + "\n")


def read_selections(path) -> list[SelectionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(selection_from_json(line))
    return out


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path, params: ScorerParams, metadata: dict | None = None):
    params.validate()
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "dim": params.dim,
        "heads": params.heads,
        "n_blocks": params.n_blocks,
        "tensors": {name: t.tolist() for name, t in params.tensors.items()},
        "metadata": metadata or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dumps(payload) + "\n")


def load_checkpoint(path):
    """Returns (ScorerParams, metadata dict)."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    version = raw.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unrecognized checkpoint version {version!r}")
    tensors = {name: np.asarray(t, dtype=float) for name, t in raw["tensors"].items()}
    params = ScorerParams(
        dim=raw["dim"],
        heads=raw["heads"],
        n_blocks=raw["n_blocks"],
        tensors=tensors,
        version=version,
    )
    params.validate()
    return params, raw.get("metadata", {})


# ---------------------------------------------------------------------------
# embedding container
# ---------------------------------------------------------------------------


def write_embedding_file(path, dim: int, entries: dict[str, np.ndarray]):
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", dim, len(entries)))
        for key, matrix in entries.items():
            matrix = np.asarray(matrix, dtype=np.float32)
            if matrix.ndim != 2 or matrix.shape[1] != dim:
                raise ValueError(f"entry {key!r} does not have shape (rows, {dim})")
            encoded = key.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", matrix.shape[0]))
            fh.write(matrix.astype("<f4").tobytes(order="C"))


def _read_exact(fh, count: int) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise ValueError(f"unexpected end of file at byte {fh.tell()}")
    return data


def read_embedding_file(path):
    """Returns (dim, dict of id -> float64 matrix)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(EMBEDDING_MAGIC))
        if magic != EMBEDDING_MAGIC:
            raise ValueError("not an embedding file")
        dim, count = struct.unpack("<II", _read_exact(fh, 8))
        entries: dict[str, np.ndarray] = {}
        for _ in range(count):
            (id_len,) = struct.unpack("<I", _read_exact(fh, 4))
            key = _read_exact(fh, id_len).decode("utf-8")
            (rows,) = struct.unpack("<I", _read_exact(fh, 4))
            data = _read_exact(fh, rows * dim * 4)
            matrix = np.frombuffer(data, dtype="<f4").reshape(rows, dim).astype(float)
            entries[key] = matrix
    return dim, entries
