"""Topic quality metrics: NPMI and C_V coherence, topic diversity, IRBO."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import MetricError, ParameterError

log = logging.getLogger(__name__)

NPMI_WINDOW = 10
CV_WINDOW = 110
RBO_P = 0.9


@dataclass
class CooccurrenceCounts:
    """Boolean sliding-window counts restricted to a set of target terms."""

    window_size: int
    n_windows: int
    terms: list
    term_count: np.ndarray
    pair_count: np.ndarray

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}

    def count(self, term) -> int:
        i = self.index.get(term)
        return 0 if i is None else int(self.term_count[i])

    def pair(self, a, b) -> int:
        i, j = self.index.get(a), self.index.get(b)
        if i is None or j is None:
            return 0
        return int(self.pair_count[i, j])


def _token_lists(docs) -> list:
    return [getattr(d, "tokens", d) for d in docs]


def count_cooccurrences(docs, window_size: int, target_terms: Iterable[str]) -> CooccurrenceCounts:
    """Slide a window of ``window_size`` tokens (stride 1) over each document.

    A document shorter than the window counts as one window; empty documents
    contribute none. Windows never cross document boundaries.
    """
    if window_size < 1:
        raise ParameterError("window_size must be >= 1")
    terms = sorted(set(target_terms))
    index = {t: i for i, t in enumerate(terms)}
    ids, offsets = [], [0]
    for tokens in _token_lists(docs):
        ids.extend(index.get(t, -1) for t in tokens)
        offsets.append(len(ids))
    n_windows, term_count, pair_count = kernels.window_cooccurrence(
        np.array(ids, dtype=np.int64), np.array(offsets, dtype=np.int64), window_size, len(terms)
    )
    return CooccurrenceCounts(window_size, n_windows, terms, term_count, pair_count)


def npmi_pair(w_i, w_j, counts: CooccurrenceCounts) -> float:
    c_i, c_j = counts.count(w_i), counts.count(w_j)
    if c_i == 0 or c_j == 0:
        raise MetricError(f"term {w_i if c_i == 0 else w_j!r} never occurs in any window")
    c_ij = counts.pair(w_i, w_j)
    if c_ij == 0:
        return -1.0
    n = counts.n_windows
    if c_ij == n:
        return 1.0
    p_ij = c_ij / n
    pmi = math.log(p_ij / ((c_i / n) * (c_j / n)))
    return max(-1.0, min(1.0, pmi / -math.log(p_ij)))


def _countable(topic, counts):
    kept = [w for w in topic if counts.count(w) > 0]
    if len(kept) < len(topic):
        log.warning("skipping terms absent from the reference corpus: %s", sorted(set(topic) - set(kept)))
    return kept


def _per_topic(topics, counts, score):
    scores = []
    for t, topic in enumerate(topics):
        words = _countable(topic, counts)
        if len(words) < 2:
            log.warning("topic %d has fewer than 2 countable terms; skipped", t)
            continue
        scores.append(score(words))
    if not scores:
        raise MetricError("no topic has at least 2 countable terms")
    return float(np.mean(scores))


def coherence_npmi(topics: Sequence[Sequence[str]], counts: CooccurrenceCounts) -> float:
    """Mean pairwise NPMI within each topic, averaged over topics."""

    def score(words):
        return np.mean([npmi_pair(a, b, counts) for a, b in combinations(words, 2)])

    return _per_topic(topics, counts, score)


def coherence_cv(topics: Sequence[Sequence[str]], counts: CooccurrenceCounts, gamma: float = 1.0) -> float:
    """C_V coherence with one-set segmentation.

    Each word gets a context vector of clipped NPMI values against every
    word of its topic; its score is the cosine between that vector and the
    sum of all the topic's context vectors.
    """

    def score(words):
        M = np.array([[max(npmi_pair(a, b, counts), 0.0) ** gamma for b in words] for a in words])
        total = M.sum(axis=0)
        sims = []
        for v in M:
            denom = np.linalg.norm(v) * np.linalg.norm(total)
            sims.append(0.0 if denom == 0 else float(v @ total / denom))
        return min(1.0, max(0.0, float(np.mean(sims))))

    return _per_topic(topics, counts, score)


def topic_diversity(topics: Sequence[Sequence[str]], T: int | None = None) -> float:
    """Fraction of unique words among all topics' top-T words."""
    if not topics:
        raise ParameterError("need at least one topic")
    T = T or max(len(t) for t in topics)
    unique = set()
    for t in topics:
        unique.update(t[:T])
    return len(unique) / (len(topics) * T)


def rbo(list1: Sequence, list2: Sequence, p: float = RBO_P, depth: int | None = None) -> float:
    """Rank-biased overlap truncated at ``depth`` with extrapolation.

    Evaluated in exact rational arithmetic so that identical and disjoint
    lists give exactly 1 and 0.
    """
    if not 0 < p < 1:
        raise ParameterError("p must lie in (0, 1)")
    depth = depth or min(len(list1), len(list2))
    if depth < 1:
        raise ParameterError("depth must be >= 1")
    q = Fraction(p)
    seen1, seen2 = set(), set()
    overlap = 0
    acc = Fraction(0)
    agreement = Fraction(0)
    for d in range(1, depth + 1):
        a, b = list1[d - 1], list2[d - 1]
        if a == b:
            overlap += 1
        else:
            overlap += (a in seen2) + (b in seen1)
        seen1.add(a)
        seen2.add(b)
        agreement = Fraction(overlap, d)
        acc += q ** (d - 1) * agreement
    return float((1 - q) * acc + q**depth * agreement)


def irbo(topics: Sequence[Sequence[str]], p: float = RBO_P) -> float:
    """1 minus the mean RBO over all unordered topic pairs, at depth T."""
    if len(topics) < 2:
        raise ParameterError("IRBO needs at least 2 topics")
    depth = min(len(t) for t in topics)
    scores = [Fraction(rbo(a, b, p, depth)) for a, b in combinations(topics, 2)]
    return float(1 - sum(scores) / len(scores))


def evaluate_topics(
    topics: Sequence[Sequence[str]],
    docs,
    npmi_window: int = NPMI_WINDOW,
    cv_window: int = CV_WINDOW,
    rbo_p: float = RBO_P,
) -> dict:
    """All four scores for ``topics`` against a tokenized reference corpus.

    A score that cannot be computed is reported as ``None`` and its reason
    is stored under ``errors``.
    """
    docs = _token_lists(docs)
    targets = {w for t in topics for w in t}
    result: dict = {"errors": {}}
    for name, window, fn in (("npmi", npmi_window, coherence_npmi), ("cv", cv_window, coherence_cv)):
        try:
            result[name] = fn(topics, count_cooccurrences(docs, window, targets))
        except MetricError as exc:
            result[name] = None
            result["errors"][name] = str(exc)
    result["td"] = topic_diversity(topics)
    try:
        result["irbo"] = irbo(topics, rbo_p)
    except ParameterError as exc:
        result["irbo"] = None
        result["errors"]["irbo"] = str(exc)
    return result
