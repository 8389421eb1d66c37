"""Deterministic tokenization and sentence segmentation.

Tokens are lowercased and split on whitespace/punctuation boundaries, with
each punctuation character kept as its own token.  Sentences end at a run of
terminator characters followed by whitespace (or end of input), unless the
chunk ending at a period is a known abbreviation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

DEFAULT_ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.",
        "etc.", "e.g.", "i.e.", "vs.", "fig.", "no.", "inc.", "co.",
    }
)


@dataclass(frozen=True)
class TokenizerConfig:
    terminators: str = ".!?"
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS


@dataclass(frozen=True)
class Sentence:
    """One sentence: 0-based position plus its lowercased tokens."""

    index: int
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Document:
    """A tokenized document with sentence boundaries."""

    doc_id: str
    sentences: tuple[Sentence, ...]
    tokens: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.sentences:
            raise ValueError("empty document")
        flat = tuple(t for s in self.sentences for t in s.tokens)
        if self.tokens and self.tokens != flat:
            raise ValueError("document tokens do not match sentence tokens")
        if not self.tokens:
            object.__setattr__(self, "tokens", flat)


def _split_sentences(text: str, config: TokenizerConfig) -> list[str]:
    """Split raw text into sentence strings at terminator runs."""
    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in config.terminators:
            # extend over a run of terminators
            j = i
            while j + 1 < n and text[j + 1] in config.terminators:
                j += 1
            followed = j + 1 >= n or text[j + 1].isspace()
            abbrev = False
            if ch == "." and i == j:
                # chunk of non-space characters ending at this period
                k = i
                while k > 0 and not text[k - 1].isspace():
                    k -= 1
                abbrev = text[k : i + 1].lower() in config.abbreviations
            if followed and not abbrev:
                sentences.append(text[start : j + 1])
                start = j + 1
            i = j + 1
        else:
            i += 1
    if start < n:
        sentences.append(text[start:])
    return sentences


def tokenize(text: str, config: TokenizerConfig | None = None, doc_id: str = "") -> Document:
    """Tokenize raw text into a Document.

    Raises ValueError("empty document") when nothing survives tokenization.
    """
    config = config or TokenizerConfig()
    sentences = []
    for raw in _split_sentences(text, config):
        tokens = tuple(t.lower() for t in _TOKEN_RE.findall(raw))
        if tokens:
            sentences.append(Sentence(index=len(sentences), tokens=tokens))
    if not sentences:
        raise ValueError("empty document")
    return Document(doc_id=doc_id, sentences=tuple(sentences))


def tokenize_flat(text: str) -> tuple[str, ...]:
    """Lowercased tokens of a text fragment, without sentence segmentation."""
    return tuple(t.lower() for t in _TOKEN_RE.findall(text))


def detokenize(tokens) -> str:
    """Inverse of tokenization up to whitespace: space-joined tokens."""
    return " ".join(tokens)
