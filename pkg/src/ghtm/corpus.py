"""Corpus loading, tokenization and vocabulary construction."""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CorpusFormatError, ParameterError, VocabularyError


@dataclass
class Document:
    id: str
    raw_text: str
    tokens: list[str] = field(default_factory=list)


def _identity(term: str) -> str:
    return term


@dataclass(frozen=True)
class TokenizerConfig:
    """Preprocessing knobs.

    ``punctuation_categories`` lists Unicode general-category prefixes that
    count as punctuation (default: punctuation and symbols). Numerics are every
    character in category ``N*``, which covers non-Latin digit systems too.
    """

    stopword_set: frozenset[str] = frozenset()
    min_token_length: int = 1
    strip_punctuation: bool = True
    strip_numerics: bool = True
    lemmatizer: Callable[[str], str] = _identity
    punctuation_categories: tuple[str, ...] = ("P", "S")

    def __post_init__(self):
        if self.min_token_length < 1:
            raise ParameterError("min_token_length must be >= 1")
        if not isinstance(self.stopword_set, frozenset):
            object.__setattr__(self, "stopword_set", frozenset(self.stopword_set))


@dataclass
class Vocabulary:
    term_to_index: dict[str, int]
    index_to_term: list[str]
    doc_freq: np.ndarray
    n_docs: int

    def __len__(self) -> int:
        return len(self.index_to_term)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_index


@lru_cache(maxsize=65536)
def _category(ch: str) -> str:
    return unicodedata.category(ch)


def _clean_chars(text: str, config: TokenizerConfig) -> str:
    if not (config.strip_punctuation or config.strip_numerics):
        return text
    out = []
    for ch in text:
        cat = _category(ch)
        if config.strip_numerics and cat[0] == "N":
            out.append(" ")
        elif config.strip_punctuation and cat[0] in config.punctuation_categories:
            out.append(" ")
        else:
            out.append(ch)
    return "".join(out)


def tokenize(text: str, config: TokenizerConfig | None = None) -> list[str]:
    """Split ``text`` into preprocessed terms.

    Stripped characters act as separators, so ``"well-known"`` yields two
    terms. Lowercasing is a no-op for unicameral scripts such as Bengali.
    """
    config = config or TokenizerConfig()
    text = _clean_chars(text, config).lower()
    terms = []
    for term in text.split():
        if len(term) < config.min_token_length or term in config.stopword_set:
            continue
        term = config.lemmatizer(term)
        if term:
            terms.append(term)
    return terms


def _decode(data: bytes, path) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusFormatError(
            f"{path}: invalid UTF-8 at byte offset {exc.start}"
        ) from exc


def load_corpus(path, format: str = "plain-lines") -> list[Document]:
    """Read documents from ``path``.

    ``plain-lines``: one document per line, id = zero-based line number.
    ``json-lines``: one object per line with a string ``text`` and an
    optional ``id`` (defaults to the line number). Blank lines are skipped in
    json-lines but kept as empty documents in plain-lines.
    """
    path = Path(path)
    text = _decode(path.read_bytes(), path)
    lines = text.splitlines()
    docs: list[Document] = []
    if format == "plain-lines":
        docs = [Document(id=str(i), raw_text=line) for i, line in enumerate(lines)]
    elif format == "json-lines":
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict) or not isinstance(record.get("text"), str):
                raise CorpusFormatError(f"{path}:{lineno}: record has no string 'text' field")
            doc_id = record.get("id", lineno - 1)
            docs.append(Document(id=str(doc_id), raw_text=record["text"]))
    else:
        raise ParameterError(f"unknown corpus format {format!r}")

    seen = set()
    for doc in docs:
        if doc.id in seen:
            raise CorpusFormatError(f"{path}: duplicate document id {doc.id!r}")
        seen.add(doc.id)
    return docs


def load_stopwords(path) -> frozenset[str]:
    path = Path(path)
    text = _decode(path.read_bytes(), path)
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def tokenize_documents(docs: Iterable[Document], config: TokenizerConfig | None = None) -> list[Document]:
    """Fill ``tokens`` on every document in place and return the list."""
    docs = list(docs)
    for doc in docs:
        doc.tokens = tokenize(doc.raw_text, config)
    return docs


def build_vocabulary(
    docs: Sequence[Document], min_df: int = 2, max_df_ratio: float = 0.95
) -> Vocabulary:
    """Document-frequency-filtered vocabulary with lexicographic indices."""
    if not docs:
        raise VocabularyError("cannot build a vocabulary from zero documents")
    if not 0 < max_df_ratio <= 1:
        raise ParameterError("max_df_ratio must be in (0, 1]")
    n = len(docs)
    df = Counter()
    for doc in docs:
        df.update(set(doc.tokens))
    max_df = max_df_ratio * n
    kept = sorted(t for t, c in df.items() if min_df <= c <= max_df)
    if not kept:
        raise VocabularyError(
            f"all {len(df)} terms filtered out (min_df={min_df}, max_df_ratio={max_df_ratio})"
        )
    return Vocabulary(
        term_to_index={t: i for i, t in enumerate(kept)},
        index_to_term=kept,
        doc_freq=np.array([df[t] for t in kept], dtype=np.int64),
        n_docs=n,
    )
