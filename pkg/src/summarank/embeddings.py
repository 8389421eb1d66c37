"""Embedding providers.

Two providers satisfy the same contract (a matrix of per-token rows for a
text): a builtin one deriving deterministic unit vectors from a seeded hash
of each token string, and a file-backed one serving precomputed contextual
matrices keyed by the space-joined token string.  Real encoders plug in by
writing the embedding file format (see fileio).
"""

from __future__ import annotations

import hashlib

import numpy as np

from .textproc import detokenize
from .weighting import ScorerParams


class HashEmbeddings:
    """Deterministic per-token unit vectors from a seeded hash."""

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=8, key=str(self.seed).encode("utf-8")
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.normal(size=self.dim)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def matrix(self, tokens) -> np.ndarray:
        if not tokens:
            raise ValueError("cannot embed an empty token list")
        return np.stack([self._vector(t) for t in tokens])


class FileEmbeddings:
    """Precomputed matrices keyed by the space-joined token string.

    Document entries may carry one extra leading row (a stored global/CLS
    row); candidate entries must have exactly one row per token.
    """

    def __init__(self, entries: dict[str, np.ndarray], dim: int | None = None):
        if not entries and dim is None:
            raise ValueError("need at least one entry or an explicit dim")
        self.entries = entries
        self.dim = dim if dim is not None else next(iter(entries.values())).shape[1]
        for key, mat in entries.items():
            if mat.ndim != 2 or mat.shape[1] != self.dim:
                raise ValueError(f"entry {key!r} does not match dim {self.dim}")

    @classmethod
    def from_file(cls, path) -> "FileEmbeddings":
        from .fileio import read_embedding_file

        dim, entries = read_embedding_file(path)
        return cls(entries, dim=dim)

    def matrix(self, tokens) -> np.ndarray:
        key = detokenize(tokens)
        mat = self.entries.get(key)
        if mat is None:
            raise ValueError(f"embedding not found for {key!r}")
        return mat


def check_matrix(matrix: np.ndarray, dim: int | None = None) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError("embedding matrix must be 2-dimensional and non-empty")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("embedding matrix contains NaN or Inf")
    if dim is not None and matrix.shape[1] != dim:
        raise ValueError(f"embedding dimension {matrix.shape[1]} does not match {dim}")
    return matrix


def embed_document(tokens, provider, params: ScorerParams) -> np.ndarray:
    """Raw document matrix with the global slot at row 0.

    Providers return either one row per token (the learned global-slot vector
    is prepended) or one extra leading row (used verbatim as the slot).
    """
    tokens = list(tokens)
    if not tokens:
        raise ValueError("cannot embed an empty document")
    raw = check_matrix(provider.matrix(tokens), dim=params.dim)
    if raw.shape[0] == len(tokens):
        return np.vstack([params.global_slot[None, :], raw])
    if raw.shape[0] == len(tokens) + 1:
        return raw
    raise ValueError(
        f"document matrix has {raw.shape[0]} rows for {len(tokens)} tokens"
    )


def embed_candidate(tokens, provider, params: ScorerParams) -> np.ndarray:
    tokens = list(tokens)
    if not tokens:
        raise ValueError("empty candidate")
    raw = check_matrix(provider.matrix(tokens), dim=params.dim)
    if raw.shape[0] != len(tokens):
        raise ValueError(
            f"candidate matrix has {raw.shape[0]} rows for {len(tokens)} tokens"
        )
    return raw
