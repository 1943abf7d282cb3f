import json
import os
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from ghtm import pipeline
from ghtm.cli import main
from ghtm.config import ConfigError, PipelineConfig, stage_seed
from ghtm.errors import StageError
from ghtm.factorize import read_topics, write_topics

from conftest import DATA

CONFIG = str(DATA / "config.yaml")


def parse_metrics(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, val = line.partition(": ")
        out[key] = val
    return out


def run_cli(*args):
    env = dict(os.environ, OPENBLAS_NUM_THREADS="1", OMP_NUM_THREADS="1", MKL_NUM_THREADS="1")
    return subprocess.run(
        [sys.executable, "-m", "ghtm", *args], capture_output=True, text=True, env=env, timeout=300
    )


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main(["run", "--config", CONFIG, "--out-dir", str(out)])
    return code, out


class TestRun:
    def test_fixture_run(self, fixture_run):
        code, out = fixture_run
        assert code == 0
        topics = read_topics(out / "topics.txt")
        assert len(topics) == 3 and all(len(t) == 5 for t in topics)
        m = parse_metrics(out / "metrics.txt")
        assert m["model"] == "ghtm"
        for key in ("cv", "npmi", "td", "irbo"):
            assert m[key] != "null"
        assert -1 <= float(m["npmi"]) <= 1 and 0 <= float(m["cv"]) <= 1
        assert 0 <= float(m["td"]) <= 1 and 0 <= float(m["irbo"]) <= 1
        assert int(m["topics_identified"]) == 3 and float(m["runtime_seconds"]) >= 0
        assert (out / "doc_topic.txt").exists()

    def test_stage_timings_cover_total(self, fixture_run):
        _, out = fixture_run
        report = json.loads((out / "run_report.json").read_text())
        stages = report["stage_seconds"]
        assert set(stages) == {"corpus", "vectorize", "graph", "gcn", "factorize", "metrics"}
        total = report["runtime_seconds"]
        assert abs(sum(stages.values()) - total) <= 0.1 * total

    def test_missing_embeddings(self, tmp_path, capsys):
        code = main(["run", "--config", CONFIG, "--embeddings", str(tmp_path / "gone.vec"),
                     "--out-dir", str(tmp_path)])
        assert code != 0
        assert "gone.vec" in capsys.readouterr().err
        assert not (tmp_path / "topics.txt").exists()

    def test_flags_override_config(self, tmp_path):
        assert main(["run", "--config", CONFIG, "--topics", "2", "--top-words", "4",
                     "--out-dir", str(tmp_path)]) == 0
        topics = read_topics(tmp_path / "topics.txt")
        assert len(topics) == 2 and all(len(t) == 4 for t in topics)

    def test_deterministic_across_processes(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            res = run_cli("run", "--config", CONFIG, "--out-dir", str(out), "--seed", "5")
            assert res.returncode == 0, res.stderr
            outs.append(out)
        assert (outs[0] / "topics.txt").read_bytes() == (outs[1] / "topics.txt").read_bytes()

    def test_cache_reused_when_k_changes(self, tmp_path):
        cfg = PipelineConfig.load(CONFIG).override(out_dir=str(tmp_path), num_clusters=2)
        first = pipeline.run_ghtm(cfg)
        assert first.cache_hits == []
        second = pipeline.run_ghtm(cfg.override(k=2))
        assert "refined" in second.cache_hits and "doc-embeddings" in second.cache_hits

    def test_stage_failure_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "vectors.txt"
        bad.write_text("alpha 1 2\nbeta 1 2 3\n", encoding="utf-8")
        code = main(["run", "--config", CONFIG, "--embeddings", str(bad), "--out-dir", str(tmp_path / "o")])
        assert code == 2
        assert "stage 'vectorize' failed" in capsys.readouterr().err

    def test_stage_error_names_stage(self, tmp_path):
        bad = tmp_path / "vectors.txt"
        bad.write_text("planet 1 x\n", encoding="utf-8")
        cfg = PipelineConfig.load(CONFIG).override(embeddings_path=str(bad), out_dir=str(tmp_path))
        with pytest.raises(StageError) as info:
            pipeline.run_ghtm(cfg)
        assert info.value.stage == "vectorize"

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["run", "--topics", "many"])
        assert info.value.code == 1


class TestBaseline:
    def test_fixture(self, tmp_path):
        assert main(["baseline", "--config", CONFIG, "--out-dir", str(tmp_path)]) == 0
        m = parse_metrics(tmp_path / "metrics.txt")
        assert m["model"] == "nmf-tfidf"
        assert len(read_topics(tmp_path / "topics.txt")) == 3

    def test_single_topic(self, tmp_path):
        assert main(["baseline", "--config", CONFIG, "--topics", "1", "--out-dir", str(tmp_path)]) == 0
        m = parse_metrics(tmp_path / "metrics.txt")
        assert float(m["td"]) == 1.0
        assert m["irbo"] == "null" and "irbo_error" in m

    def test_deterministic(self, tmp_path):
        cfg = PipelineConfig.load(CONFIG)
        a = pipeline.run_baseline(cfg.override(out_dir=str(tmp_path / "a")))
        b = pipeline.run_baseline(cfg.override(out_dir=str(tmp_path / "b")))
        assert a.topics == b.topics and a.scores == b.scores


class TestEvaluate:
    def test_disjoint_topics(self, tmp_path, capsys):
        p = tmp_path / "t.txt"
        write_topics(p, [["cat", "dog"], ["rocket", "orbit"]])
        assert main(["evaluate", str(p), "--config", CONFIG]) == 0
        out = capsys.readouterr().out
        assert "td: 1.000000" in out and "irbo: 1.000000" in out

    def test_single_topic(self, tmp_path, capsys):
        p = tmp_path / "t.txt"
        write_topics(p, [["cat", "dog", "bird"]])
        assert main(["evaluate", str(p), "--config", CONFIG]) == 0
        out = capsys.readouterr().out
        assert "irbo: null" in out and "irbo_error" in out
        assert "npmi: null" not in out and "td: 1.000000" in out

    def test_duplicate_term(self, tmp_path, capsys):
        p = tmp_path / "t.txt"
        p.write_text("0\tcat\tdog\n1\torbit\torbit\n", encoding="utf-8")
        assert main(["evaluate", str(p), "--config", CONFIG]) == 1
        assert ":2:" in capsys.readouterr().err


class TestConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert (cfg.epochs, cfg.learning_rate, cfg.dropout, cfg.edge_dropout, cfg.knn_k, cfg.output_dim) == (
            100, 0.005, 0.4, 0.2, 15, 64,
        )
        tc = cfg.train_config()
        assert tc.num_clusters == cfg.k and tc.seed == stage_seed(0, "gcn")

    def test_relative_paths_resolve_against_file(self):
        cfg = PipelineConfig.load(CONFIG)
        assert Path(cfg.corpus_path) == DATA / "corpus.txt"
        assert cfg.out_dir == "ghtm-out"

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text(yaml.safe_dump({"gcn": {"epoch": 3}}))
        with pytest.raises(ConfigError, match="gcn.epoch"):
            PipelineConfig.load(p)

    def test_missing_corpus_named(self, tmp_path):
        cfg = PipelineConfig(corpus_path=str(tmp_path / "none.txt"))
        with pytest.raises(ConfigError, match="none.txt"):
            cfg.validate(need_embeddings=False)

    def test_stage_seeds_differ(self):
        assert stage_seed(0, "gcn") != stage_seed(0, "nmf")
        assert stage_seed(3, "gcn") == stage_seed(3, "gcn")
