import numpy as np
import pytest
import scipy.sparse as sp

from ghtm.corpus import Vocabulary
from ghtm.errors import ParameterError, TopicsFileError
from ghtm.factorize import (
    absolute_transform,
    baseline_nmf_topics,
    extract_topic_words,
    nmf,
    read_topics,
    representative_documents,
    write_topics,
)
from ghtm.vectorize import DocTermMatrix


def vocab(*terms):
    terms = list(terms)
    return Vocabulary({t: i for i, t in enumerate(terms)}, terms, np.ones(len(terms), dtype=np.int64), 1)


def counts(rows):
    return DocTermMatrix(sp.csr_matrix(np.asarray(rows, dtype=np.float64)), "raw-count")


def is_monotone(trace, rel=1e-12):
    t = np.asarray(trace)
    return bool(np.all(t[1:] <= t[:-1] * (1 + rel) + 1e-300))


class TestAbsoluteTransform:
    def test_examples(self):
        np.testing.assert_array_equal(absolute_transform([[-2.0, 3.0], [0.0, -0.5]]), [[2.0, 3.0], [0.0, 0.5]])

    def test_idempotent(self):
        X = np.random.default_rng(0).normal(size=(5, 4))
        once = absolute_transform(X)
        np.testing.assert_array_equal(absolute_transform(once), once)
        assert np.all(once >= 0)


class TestNmf:
    def test_rank_one(self):
        X = np.outer([1.0, 2.0, 3.0], [1.0, 1.0])
        W, H, trace = nmf(X, 1, max_iters=500, tol=0.0, seed=0, return_trace=True)
        assert len(trace) <= 501
        assert np.linalg.norm(X - W @ H) < 1e-3

    def test_zero_matrix(self):
        W, H = nmf(np.zeros((4, 3)), 2)
        assert np.all(np.isfinite(W)) and np.all(np.isfinite(H))
        assert np.linalg.norm(W @ H) == 0.0

    def test_negative_input(self):
        with pytest.raises(ParameterError):
            nmf(np.array([[1.0, -1.0]]), 1)
        with pytest.raises(ParameterError):
            nmf(sp.csr_matrix(np.array([[1.0, -1.0]])), 1)

    def test_bad_k(self):
        with pytest.raises(ParameterError):
            nmf(np.ones((3, 2)), 3)

    def test_monotone_and_nonnegative(self):
        rng = np.random.default_rng(0)
        for seed in range(20):
            X = rng.random((15, 12))
            W, H, trace = nmf(X, 3, max_iters=200, tol=0.0, seed=seed, return_trace=True)
            assert is_monotone(trace)
            assert np.all(W >= 0) and np.all(H >= 0)

    def test_sparse_matches_dense(self):
        rng = np.random.default_rng(3)
        X = rng.random((10, 8)) * (rng.random((10, 8)) < 0.4)
        Wd, Hd, td = nmf(X, 2, max_iters=50, seed=4, return_trace=True)
        Ws, Hs, ts = nmf(sp.csr_matrix(X), 2, max_iters=50, seed=4, return_trace=True)
        np.testing.assert_allclose(Wd, Ws, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(Hd, Hs, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(td, ts, rtol=1e-6)

    def test_deterministic(self):
        X = np.random.default_rng(1).random((9, 7))
        a = nmf(X, 3, seed=5)
        b = nmf(X, 3, seed=5)
        assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()

    def test_converges_early_with_loose_tol(self):
        X = np.random.default_rng(2).random((8, 6))
        _, _, trace = nmf(X, 2, max_iters=500, tol=0.5, return_trace=True)
        assert len(trace) - 1 == 20


class TestTopicWords:
    def test_identity_assignment(self):
        W = np.eye(2)
        c = counts([[3, 1, 0], [0, 1, 5]])
        assert extract_topic_words(W, c, vocab("a", "b", "c"), T=1) == [["a"], ["c"]]

    def test_full_lists(self):
        W = np.eye(2)
        c = counts([[3, 1, 0], [0, 1, 5]])
        assert extract_topic_words(W, c, vocab("a", "b", "c"), T=3) == [["a", "b"], ["c", "b"]]

    def test_lexicographic_tie(self):
        W = np.array([[1.0]])
        c = counts([[2, 2, 2]])
        assert extract_topic_words(W, c, vocab("zeta", "alpha", "mid"), T=2) == [["alpha", "mid"]]

    def test_unassigned_topic_falls_back(self):
        W = np.array([[0.9, 0.2], [0.8, 0.5]])
        c = counts([[1, 0], [0, 4]])
        # topic 1 owns no documents; its strongest document is row 1
        topics = extract_topic_words(W, c, vocab("a", "b"), T=1, max_rep_docs=1)
        assert topics == [["a"], ["b"]]

    def test_short_topic_flagged(self):
        topics, short = extract_topic_words(np.eye(2), counts([[1, 0], [0, 1]]), vocab("a", "b"), T=2,
                                            return_flags=True)
        assert topics == [["a"], ["b"]] and short == [0, 1]

    def test_representative_cap_and_order(self):
        W = np.array([[0.5, 0.0], [0.9, 0.1], [0.7, 0.0], [0.0, 1.0]])
        assert representative_documents(W, 0, 2).tolist() == [1, 2]

    def test_row_mismatch(self):
        with pytest.raises(ParameterError):
            extract_topic_words(np.eye(3), counts([[1, 0]]), vocab("a", "b"))


class TestBaseline:
    def test_block_diagonal(self):
        X = np.zeros((6, 6))
        X[:3, :3] = 1.0
        X[3:, 3:] = 1.0
        tfidf = DocTermMatrix(sp.csr_matrix(X), "tfidf")
        model = baseline_nmf_topics(tfidf, vocab(*"abcdef"), 2, T=3, seed=0)
        assert sorted(sorted(t) for t in model.topics) == [["a", "b", "c"], ["d", "e", "f"]]

    def test_single_topic(self):
        tfidf = DocTermMatrix(sp.csr_matrix(np.array([[1.0, 0.5], [0.2, 1.0]])), "tfidf")
        model = baseline_nmf_topics(tfidf, vocab("a", "b"), 1, T=2)
        assert len(model.topics) == 1 and sorted(model.topics[0]) == ["a", "b"]

    def test_deterministic(self):
        X = np.random.default_rng(0).random((12, 10))
        tfidf = DocTermMatrix(sp.csr_matrix(X), "tfidf")
        v = vocab(*[f"w{i}" for i in range(10)])
        a = baseline_nmf_topics(tfidf, v, 3, T=4, seed=9)
        b = baseline_nmf_topics(tfidf, v, 3, T=4, seed=9)
        assert a.topics == b.topics


class TestTopicsFile:
    def test_roundtrip(self, tmp_path):
        topics = [["alpha", "beta"], ["gamma", "delta", "eps"]]
        p = tmp_path / "topics.txt"
        write_topics(p, topics)
        assert p.read_text().splitlines()[0] == "0\talpha\tbeta"
        assert read_topics(p) == topics

    @pytest.mark.parametrize(
        "body, match",
        [
            ("x\ta\tb\n", ":1:"),
            ("0\ta\tb\n1\ta\t\n", ":2: empty"),
            ("0\ta\tb\n1\tc\tc\n", ":2: duplicate"),
            ("0\n", ":1:"),
            ("", "no topics"),
        ],
    )
    def test_errors(self, tmp_path, body, match):
        p = tmp_path / "topics.txt"
        p.write_text(body, encoding="utf-8")
        with pytest.raises(TopicsFileError, match=match):
            read_topics(p)
