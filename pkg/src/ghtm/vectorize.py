"""Document-term matrices, word-vector loading and document projection."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .corpus import Document, Vocabulary
from .errors import EmbeddingFormatError, ParameterError, ShapeError


@dataclass
class DocTermMatrix:
    """N x V sparse matrix; ``variant`` is ``"raw-count"`` or ``"tfidf"``.

    Backed by a canonical CSR matrix (sorted column indices, no explicit
    zeros).
    """

    matrix: sp.csr_matrix
    variant: str

    @property
    def n_docs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_terms(self) -> int:
        return self.matrix.shape[1]

    def row(self, i: int) -> list[tuple[int, float]]:
        m = self.matrix
        lo, hi = m.indptr[i], m.indptr[i + 1]
        return list(zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist()))


@dataclass
class EmbeddingTable:
    dim: int
    vectors: np.ndarray
    oov_count: int


@dataclass
class DocEmbeddings:
    matrix: np.ndarray


def compute_counts(docs: Sequence[Document], vocab: Vocabulary) -> DocTermMatrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    t2i = vocab.term_to_index
    for doc in docs:
        row: dict[int, int] = {}
        for tok in doc.tokens:
            j = t2i.get(tok)
            if j is not None:
                row[j] = row.get(j, 0) + 1
        for j in sorted(row):
            indices.append(j)
            data.append(row[j])
        indptr.append(len(indices))
    m = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(docs), len(vocab)),
    )
    return DocTermMatrix(m, "raw-count")


def inverse_document_frequency(doc_freq, n_docs: int) -> np.ndarray:
    """Smoothed idf: ``ln((1 + N) / (1 + df)) + 1``."""
    doc_freq = np.asarray(doc_freq, dtype=np.float64)
    return np.log((1.0 + n_docs) / (1.0 + doc_freq)) + 1.0


def compute_tfidf(counts: DocTermMatrix) -> DocTermMatrix:
    """Raw tf times smoothed idf, then L2-normalize every nonzero row.

    Document frequencies are taken from ``counts`` itself, so the result
    depends only on the count matrix.
    """
    if counts.variant != "raw-count":
        raise ParameterError("compute_tfidf expects a raw-count matrix")
    m = counts.matrix
    n_docs = m.shape[0]
    df = np.bincount(m.indices, minlength=m.shape[1])
    idf = inverse_document_frequency(df, n_docs)
    data = m.data * idf[m.indices]
    row_ids = np.repeat(np.arange(n_docs), np.diff(m.indptr))
    norms = np.sqrt(np.bincount(row_ids, weights=data * data, minlength=n_docs))
    if data.size:
        data = data / norms[row_ids]
    out = sp.csr_matrix((data, m.indices.copy(), m.indptr.copy()), shape=m.shape)
    return DocTermMatrix(out, "tfidf")


def _is_header(parts: list[str]) -> bool:
    return len(parts) == 2 and all(p.isdigit() for p in parts)


def load_embeddings(path, vocab: Vocabulary) -> EmbeddingTable:
    """Read a word-vector text file (``term v1 ... vD`` per line).

    A leading ``count dim`` header line is skipped. Every line is checked for
    a consistent field count; only rows for vocabulary terms are parsed into
    floats. The first occurrence of a repeated term wins.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"embedding file not found: {path}")
    dim = None
    found: dict[int, np.ndarray] = {}
    t2i = vocab.term_to_index
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and _is_header(parts):
                continue
            width = len(parts) - 1
            if width < 1:
                raise EmbeddingFormatError(f"{path}:{lineno}: line has no vector components")
            if dim is None:
                dim = width
            elif width != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} components, found {width}"
                )
            j = t2i.get(parts[0])
            if j is None or j in found:
                continue
            try:
                found[j] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: {exc}") from exc
    if dim is None:
        raise EmbeddingFormatError(f"{path}: no vectors found")
    vectors = np.zeros((len(vocab), dim), dtype=np.float64)
    for j, vec in found.items():
        vectors[j] = vec
    return EmbeddingTable(dim=dim, vectors=vectors, oov_count=len(vocab) - len(found))


def save_embeddings(path, terms: Sequence[str], vectors: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for term, vec in zip(terms, vectors):
            fh.write(term + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def project_documents(tfidf: DocTermMatrix, table: EmbeddingTable) -> DocEmbeddings:
    """N x D document vectors: TF-IDF rows times the embedding table."""
    if tfidf.n_terms != table.vectors.shape[0]:
        raise ShapeError(
            f"TF-IDF has {tfidf.n_terms} terms but embedding table has {table.vectors.shape[0]} rows"
        )
    m = tfidf.matrix
    out = kernels.csr_dense_matmul(m.indptr, m.indices, m.data, table.vectors)
    return DocEmbeddings(out)
