"""Non-negative factorization of document embeddings and topic-word mapping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Vocabulary
from .errors import ParameterError, TopicsFileError
from .vectorize import DocTermMatrix

log = logging.getLogger(__name__)

EPS = 1e-12


@dataclass
class TopicModel:
    W: np.ndarray
    H: np.ndarray
    topics: list
    k: int
    T: int
    short_topics: list = field(default_factory=list)


def absolute_transform(X) -> np.ndarray:
    return np.abs(np.asarray(X, dtype=np.float64))


def _objective(X, W, H, x_sq):
    if sp.issparse(X):
        cross = np.sum((X @ H.T) * W)
        val = x_sq - 2.0 * cross + np.sum((W.T @ W) * (H @ H.T))
        return float(np.sqrt(max(val, 0.0)))
    return float(np.linalg.norm(X - W @ H))


def nmf(X, k: int, max_iters: int = 500, tol: float = 1e-4, seed=0, return_trace: bool = False):
    """Frobenius-loss NMF by Lee-Seung multiplicative updates.

    ``X`` may be dense or scipy-sparse. The relative objective change is
    checked every 10 iterations against ``tol``. With ``return_trace`` the
    objective after every iteration (index 0 = initialization) is returned
    as a third value.
    """
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        if X.nnz and X.data.min() < 0:
            raise ParameterError("NMF input has negative entries")
        mean = X.sum() / (X.shape[0] * X.shape[1])
        x_sq = float(X.multiply(X).sum())
    else:
        X = np.asarray(X, dtype=np.float64)
        if np.any(X < 0):
            raise ParameterError("NMF input has negative entries")
        mean = X.mean()
        x_sq = float(np.sum(X * X))
    n, m = X.shape
    if not 1 <= k <= min(n, m):
        raise ParameterError(f"k must be in [1, {min(n, m)}], got {k}")

    rng = np.random.default_rng(seed)
    scale = np.sqrt(mean / k)
    W = rng.uniform(0.0, 1.0, size=(n, k)) * scale
    H = rng.uniform(0.0, 1.0, size=(k, m)) * scale

    prev = _objective(X, W, H, x_sq)
    trace = [prev]
    for it in range(1, max_iters + 1):
        WtX = (X.T @ W).T
        H *= WtX / (W.T @ W @ H + EPS)
        XHt = X @ H.T
        W *= XHt / (W @ (H @ H.T) + EPS)
        if return_trace:
            trace.append(_objective(X, W, H, x_sq))
        if it % 10 == 0:
            cur = _objective(X, W, H, x_sq)
            if prev == 0.0 or (prev - cur) / prev < tol:
                break
            prev = cur
    W, H = np.asarray(W), np.asarray(H)
    return (W, H, trace) if return_trace else (W, H)


def _top_terms(weights: np.ndarray, vocab: Vocabulary, T: int) -> list[str]:
    nz = np.flatnonzero(weights > 0)
    terms = vocab.index_to_term
    ranked = sorted(nz.tolist(), key=lambda j: (-weights[j], terms[j]))
    return [terms[j] for j in ranked[:T]]


def representative_documents(W: np.ndarray, topic: int, max_rep_docs: int) -> np.ndarray:
    """Documents whose strongest topic is ``topic``, ranked by weight.

    Falls back to the top-weighted documents overall when no document is
    assigned to the topic.
    """
    assigned = np.flatnonzero(np.argmax(W, axis=1) == topic)
    if assigned.size == 0:
        assigned = np.arange(W.shape[0])
    order = np.argsort(-W[assigned, topic], kind="stable")
    return assigned[order[:max_rep_docs]]


def extract_topic_words(
    W: np.ndarray,
    counts: DocTermMatrix,
    vocab: Vocabulary,
    T: int = 10,
    max_rep_docs: int = 100,
    return_flags: bool = False,
):
    """Map each NMF component to words via the raw counts of its
    representative documents. Ties in aggregated counts break
    lexicographically."""
    W = np.asarray(W)
    if counts.n_docs != W.shape[0]:
        raise ParameterError(f"W has {W.shape[0]} rows but counts have {counts.n_docs} documents")
    topics, short = [], []
    for t in range(W.shape[1]):
        docs = representative_documents(W, t, max_rep_docs)
        agg = np.asarray(counts.matrix[docs].sum(axis=0)).ravel()
        words = _top_terms(agg, vocab, T)
        if len(words) < T:
            log.warning("topic %d has only %d terms with nonzero counts", t, len(words))
            short.append(t)
        topics.append(words)
    return (topics, short) if return_flags else topics


def baseline_nmf_topics(
    tfidf: DocTermMatrix,
    vocab: Vocabulary,
    k: int,
    T: int = 10,
    max_iters: int = 500,
    tol: float = 1e-4,
    seed=0,
) -> TopicModel:
    """Classical NMF on the TF-IDF matrix; topic words are the heaviest
    vocabulary columns of each row of H."""
    W, H = nmf(tfidf.matrix, k, max_iters=max_iters, tol=tol, seed=seed)
    topics, short = [], []
    for t in range(k):
        words = _top_terms(H[t], vocab, T)
        if len(words) < T:
            short.append(t)
        topics.append(words)
    return TopicModel(W, H, topics, k, T, short)


def write_topics(path, topics: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, words in enumerate(topics):
            fh.write("\t".join([str(i), *words]) + "\n")


def read_topics(path) -> list[list[str]]:
    """Parse a topics file (``topic_id<TAB>term<TAB>term...`` per line)."""
    topics = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise TopicsFileError(f"{path}:{lineno}: expected a topic id followed by terms")
        try:
            int(fields[0])
        except ValueError:
            raise TopicsFileError(f"{path}:{lineno}: topic id {fields[0]!r} is not an integer") from None
        words = fields[1:]
        if any(not w for w in words):
            raise TopicsFileError(f"{path}:{lineno}: empty term")
        if len(set(words)) != len(words):
            raise TopicsFileError(f"{path}:{lineno}: duplicate term in topic")
        topics.append(words)
    if not topics:
        raise TopicsFileError(f"{path}: no topics found")
    return topics


def write_matrix(path, M: np.ndarray) -> None:
    np.savetxt(path, M, fmt="%.10g")
