"""Planted-topic corpora with matching synthetic word vectors.

Used by the test suite and handy for trying the CLI:

    python -m ghtm.synthetic OUT_DIR
"""

from __future__ import annotations

import argparse
import string
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .vectorize import save_embeddings

_TOPIC_PREFIXES = ["ka", "lo", "mi", "nu", "pe", "ru", "so", "ti", "vu", "we"]


def _codes(n: int) -> list[str]:
    letters = string.ascii_lowercase
    return ["".join(c) for c in product(letters, repeat=2)][:n]


@dataclass
class PlantedCorpus:
    texts: list
    labels: np.ndarray
    topic_terms: list
    background_terms: list
    terms: list
    vectors: np.ndarray

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        corpus = out / "corpus.txt"
        corpus.write_text("\n".join(self.texts) + "\n", encoding="utf-8")
        vectors = out / "vectors.txt"
        save_embeddings(vectors, self.terms, self.vectors)
        return {"corpus": corpus, "vectors": vectors}


def planted_corpus(
    n_docs: int = 500,
    n_topics: int = 5,
    terms_per_topic: int = 40,
    n_background: int = 50,
    dim: int = 32,
    doc_length: tuple = (40, 80),
    topic_share: float = 0.8,
    noise: float = 0.35,
    seed: int = 0,
) -> PlantedCorpus:
    """Generate documents that each draw mostly from one planted topic.

    Every document picks a topic (round robin), then draws ``topic_share``
    of its tokens from that topic's exclusive terms (Zipf-weighted) and the
    rest uniformly from the shared background terms. A topic term's vector
    is its topic centroid plus Gaussian noise; background vectors are pure
    noise of the same scale.
    """
    if n_topics > len(_TOPIC_PREFIXES):
        raise ValueError(f"at most {len(_TOPIC_PREFIXES)} topics supported")
    rng = np.random.default_rng(seed)
    codes = _codes(max(terms_per_topic, n_background))
    topic_terms = [[_TOPIC_PREFIXES[t] + c for c in codes[:terms_per_topic]] for t in range(n_topics)]
    background = ["zq" + c for c in codes[:n_background]]

    zipf = 1.0 / np.arange(1, terms_per_topic + 1) ** 0.5
    zipf /= zipf.sum()
    texts, labels = [], []
    for i in range(n_docs):
        t = i % n_topics
        length = int(rng.integers(doc_length[0], doc_length[1] + 1))
        n_topic = int(rng.binomial(length, topic_share))
        words = list(rng.choice(topic_terms[t], size=n_topic, p=zipf))
        words += list(rng.choice(background, size=length - n_topic))
        rng.shuffle(words)
        texts.append(" ".join(words))
        labels.append(t)

    centroids = rng.normal(size=(n_topics, dim))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    vecs = []
    for t in range(n_topics):
        vecs.append(centroids[t] + noise * rng.normal(size=(terms_per_topic, dim)) / np.sqrt(dim) * 3)
    vecs.append(noise * rng.normal(size=(n_background, dim)) / np.sqrt(dim) * 3)
    terms = [w for ts in topic_terms for w in ts] + background
    return PlantedCorpus(texts, np.array(labels), topic_terms, background, terms, np.vstack(vecs))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description="write a planted-topic corpus and word vectors")
    ap.add_argument("out_dir")
    ap.add_argument("--docs", type=int, default=500)
    ap.add_argument("--topics", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    paths = planted_corpus(n_docs=args.docs, n_topics=args.topics, seed=args.seed).write(args.out_dir)
    for name, path in paths.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
