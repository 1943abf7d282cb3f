"""End-to-end orchestration of the GHTM and baseline pipelines."""

from __future__ import annotations

import contextlib
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import factorize, gcn, graph, metrics
from .config import PipelineConfig, stage_seed
from .corpus import TokenizerConfig, Vocabulary, build_vocabulary, load_corpus, load_stopwords, tokenize_documents
from .errors import GhtmError, StageError
from .vectorize import compute_counts, compute_tfidf, load_embeddings, project_documents

log = logging.getLogger(__name__)

TOPICS_FILE = "topics.txt"
METRICS_FILE = "metrics.txt"
REPORT_FILE = "run_report.json"
W_FILE = "doc_topic.txt"


@dataclass
class RunReport:
    model: str
    seed: int
    stage_seconds: dict = field(default_factory=dict)
    total_seconds: float = 0.0
    scores: dict = field(default_factory=dict)
    topics: list = field(default_factory=list)
    topics_path: str | None = None
    config: dict = field(default_factory=dict)
    cache_hits: list = field(default_factory=list)

    @property
    def runtime_seconds(self) -> float:
        return self.total_seconds

    def metrics_lines(self) -> list[str]:
        s = self.scores
        lines = [f"model: {self.model}", f"seed: {self.seed}"]
        for key in ("cv", "npmi", "td", "irbo"):
            lines.append(f"{key}: {_fmt(s.get(key))}")
        lines.append(f"topics_identified: {sum(1 for t in self.topics if t)}")
        lines.append(f"runtime_seconds: {self.total_seconds:.3f}")
        for key, msg in sorted(s.get("errors", {}).items()):
            lines.append(f"{key}_error: {msg}")
        return lines


def _fmt(v) -> str:
    return "null" if v is None else repr(float(v))


class _Timer:
    def __init__(self, report: RunReport):
        self.report = report

    @contextlib.contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except (GhtmError, OSError, ValueError) as exc:
            raise StageError(name, exc) from exc
        finally:
            self.report.stage_seconds[name] = self.report.stage_seconds.get(name, 0.0) + (
                time.perf_counter() - start
            )


@dataclass
class PreparedCorpus:
    docs: list
    vocab: Vocabulary
    counts: object
    tfidf: object


def prepare_corpus(cfg: PipelineConfig) -> PreparedCorpus:
    stop = load_stopwords(cfg.stopwords_path) if cfg.stopwords_path else frozenset()
    tok = TokenizerConfig(
        stopword_set=stop,
        min_token_length=cfg.min_token_length,
        strip_punctuation=cfg.strip_punctuation,
        strip_numerics=cfg.strip_numerics,
    )
    docs = tokenize_documents(load_corpus(cfg.corpus_path, cfg.corpus_format), tok)
    vocab = build_vocabulary(docs, cfg.min_df, cfg.max_df_ratio)
    return PreparedCorpus(docs, vocab, None, None)


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fingerprint(*parts) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode()).hexdigest()[:24]


class _Cache:
    """Stores intermediate arrays under ``out_dir/cache`` keyed by fingerprint."""

    def __init__(self, root: Path, enabled: bool, report: RunReport):
        self.root = root / "cache"
        self.enabled = enabled
        self.report = report

    def get(self, name: str, key: str):
        path = self.root / f"{name}-{key}.npz"
        if not self.enabled or not path.exists():
            return None
        with np.load(path) as z:
            data = {k: z[k] for k in z.files}
        self.report.cache_hits.append(name)
        return data

    def put(self, name: str, key: str, **arrays) -> None:
        if not self.enabled:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.root / f".{name}-{key}.tmp.npz"
        with open(tmp, "wb") as fh:
            np.savez(fh, **arrays)
        tmp.replace(self.root / f"{name}-{key}.npz")


def _write_outputs(cfg: PipelineConfig, report: RunReport, W: np.ndarray | None) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        topics_path = out / TOPICS_FILE
        factorize.write_topics(topics_path, report.topics)
        written.append(topics_path)
        report.topics_path = str(topics_path)
        if W is not None and cfg.write_w:
            factorize.write_matrix(out / W_FILE, W)
            written.append(out / W_FILE)
        (out / METRICS_FILE).write_text("\n".join(report.metrics_lines()) + "\n", encoding="utf-8")
        written.append(out / METRICS_FILE)
        payload = {
            "model": report.model,
            "seed": report.seed,
            "stage_seconds": report.stage_seconds,
            "runtime_seconds": report.total_seconds,
            "scores": report.scores,
            "topics_path": report.topics_path,
            "cache_hits": report.cache_hits,
            "config": report.config,
        }
        (out / REPORT_FILE).write_text(json.dumps(payload, indent=2, default=str) + "\n", encoding="utf-8")
    except OSError:
        for p in written:
            p.unlink(missing_ok=True)
        raise


def _score(cfg, report, timer, docs):
    with timer.stage("metrics"):
        report.scores = metrics.evaluate_topics(
            report.topics, docs, cfg.npmi_window, cfg.cv_window, cfg.rbo_p
        )


def run_ghtm(cfg: PipelineConfig) -> RunReport:
    """corpus -> vectorize -> graph -> gcn -> factorize -> metrics."""
    cfg.validate(need_embeddings=True)
    report = RunReport(model="ghtm", seed=cfg.seed, config=cfg.as_dict())
    timer = _Timer(report)
    cache = _Cache(Path(cfg.out_dir), cfg.use_cache, report)
    t0 = time.perf_counter()

    with timer.stage("corpus"):
        prep = prepare_corpus(cfg)
    docs, vocab = prep.docs, prep.vocab

    with timer.stage("vectorize"):
        counts = compute_counts(docs, vocab)
        tfidf = compute_tfidf(counts)
        vec_key = _fingerprint(
            "vectorize", _file_digest(cfg.corpus_path), _file_digest(cfg.embeddings_path),
            cfg.stopwords_path and _file_digest(cfg.stopwords_path), cfg.corpus_format,
            cfg.min_token_length, cfg.strip_punctuation, cfg.strip_numerics, cfg.min_df, cfg.max_df_ratio,
        )
        hit = cache.get("doc-embeddings", vec_key)
        if hit is not None:
            X = hit["X"]
        else:
            table = load_embeddings(cfg.embeddings_path, vocab)
            if table.oov_count:
                log.info("%d of %d vocabulary terms have no embedding", table.oov_count, len(vocab))
            X = project_documents(tfidf, table).matrix
            cache.put("doc-embeddings", vec_key, X=X)

    tc = cfg.train_config()
    with timer.stage("graph"):
        g = graph.build_knn_graph(X, min(cfg.knn_k, X.shape[0] - 1))
        adj = graph.normalize_adjacency(g)
        partition = graph.partition_graph(X, min(tc.num_clusters, X.shape[0]), stage_seed(cfg.seed, "partition"))

    with timer.stage("gcn"):
        gcn_key = _fingerprint("gcn", vec_key, cfg.knn_k, vars(tc), cfg.seed)
        hit = cache.get("refined", gcn_key)
        if hit is not None:
            Z = hit["Z"]
        else:
            Z = gcn.train(X, g, adj, partition, tc).matrix
            cache.put("refined", gcn_key, Z=Z)

    with timer.stage("factorize"):
        X_nn = factorize.absolute_transform(Z)
        k = min(cfg.k, *X_nn.shape)
        W, H = factorize.nmf(X_nn, k, cfg.nmf_max_iters, cfg.nmf_tol, stage_seed(cfg.seed, "nmf"))
        report.topics = factorize.extract_topic_words(W, counts, vocab, cfg.top_words, cfg.max_rep_docs)

    _score(cfg, report, timer, docs)
    report.total_seconds = time.perf_counter() - t0
    _write_outputs(cfg, report, W)
    return report


def run_baseline(cfg: PipelineConfig) -> RunReport:
    """corpus -> TF-IDF -> NMF on TF-IDF -> metrics."""
    cfg.validate(need_embeddings=False)
    report = RunReport(model="nmf-tfidf", seed=cfg.seed, config=cfg.as_dict())
    timer = _Timer(report)
    t0 = time.perf_counter()
    with timer.stage("corpus"):
        prep = prepare_corpus(cfg)
    with timer.stage("vectorize"):
        tfidf = compute_tfidf(compute_counts(prep.docs, prep.vocab))
    with timer.stage("factorize"):
        k = min(cfg.k, *tfidf.matrix.shape)
        tm = factorize.baseline_nmf_topics(
            tfidf, prep.vocab, k, cfg.top_words, cfg.nmf_max_iters, cfg.nmf_tol, stage_seed(cfg.seed, "nmf")
        )
        report.topics = tm.topics
    _score(cfg, report, timer, prep.docs)
    report.total_seconds = time.perf_counter() - t0
    _write_outputs(cfg, report, tm.W)
    return report


def evaluate_file(topics_file, cfg: PipelineConfig) -> dict:
    """Score an external topics file against ``cfg.corpus_path``."""
    cfg.validate(need_embeddings=False)
    topics = factorize.read_topics(topics_file)
    prep = prepare_corpus(cfg)
    scores = metrics.evaluate_topics(topics, prep.docs, cfg.npmi_window, cfg.cv_window, cfg.rbo_p)
    scores["topics_identified"] = len(topics)
    return scores
