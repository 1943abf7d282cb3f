"""Pipeline configuration: YAML file sections plus command-line overrides."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ParameterError
from .gcn import TrainConfig


class ConfigError(ParameterError):
    pass


@dataclass
class PipelineConfig:
    corpus_path: Optional[str] = None
    corpus_format: str = "plain-lines"
    stopwords_path: Optional[str] = None
    embeddings_path: Optional[str] = None

    min_token_length: int = 2
    strip_punctuation: bool = True
    strip_numerics: bool = True
    min_df: int = 2
    max_df_ratio: float = 0.95

    knn_k: int = 15

    # GCN; num_clusters=None means "use k"
    epochs: int = 100
    learning_rate: float = 0.005
    dropout: float = 0.4
    edge_dropout: float = 0.2
    margin: float = 0.5
    temperature: float = 0.5
    hinge_weight: float = 1.0
    contrastive_weight: float = 1.0
    negatives_per_edge: int = 1
    hidden_dims: list = field(default_factory=lambda: [32, 32])
    output_dim: int = 64
    num_clusters: Optional[int] = None

    k: int = 10
    top_words: int = 10
    nmf_max_iters: int = 500
    nmf_tol: float = 1e-4
    max_rep_docs: int = 100

    npmi_window: int = 10
    cv_window: int = 110
    rbo_p: float = 0.9

    out_dir: str = "ghtm-out"
    write_w: bool = True
    use_cache: bool = True
    seed: int = 0

    # keys accepted inside each YAML section
    SECTIONS = {
        "corpus": {"path": "corpus_path", "format": "corpus_format", "stopwords": "stopwords_path"},
        "embeddings": {"path": "embeddings_path"},
        "tokenizer": {
            "min_token_length": "min_token_length",
            "strip_punctuation": "strip_punctuation",
            "strip_numerics": "strip_numerics",
        },
        "vocabulary": {"min_df": "min_df", "max_df_ratio": "max_df_ratio"},
        "graph": {"knn_k": "knn_k", "num_clusters": "num_clusters"},
        "gcn": {
            n: n
            for n in (
                "epochs learning_rate dropout edge_dropout margin temperature hinge_weight "
                "contrastive_weight negatives_per_edge hidden_dims output_dim num_clusters"
            ).split()
        },
        "nmf": {
            "k": "k",
            "top_words": "top_words",
            "max_iters": "nmf_max_iters",
            "tol": "nmf_tol",
            "max_rep_docs": "max_rep_docs",
        },
        "metrics": {"npmi_window": "npmi_window", "cv_window": "cv_window", "rbo_p": "rbo_p"},
        "output": {"dir": "out_dir", "write_w": "write_w", "use_cache": "use_cache"},
    }

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Path | None = None) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        values: dict[str, Any] = {}
        for key, val in (data or {}).items():
            if key in cls.SECTIONS:
                if not isinstance(val, dict):
                    raise ConfigError(f"section '{key}' must be a mapping")
                for sub, sub_val in val.items():
                    target = cls.SECTIONS[key].get(sub)
                    if target is None:
                        raise ConfigError(f"unknown key '{key}.{sub}'")
                    values[target] = sub_val
            elif key in names:
                values[key] = val
            else:
                raise ConfigError(f"unknown config key '{key}'")
        cfg = cls(**values)
        if base_dir is not None:
            cfg._resolve_paths(base_dir, set(values))
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML ({exc})") from None
        return cls.from_mapping(data or {}, base_dir=path.parent)

    def _resolve_paths(self, base: Path, given: set) -> None:
        for name in ("corpus_path", "stopwords_path", "embeddings_path", "out_dir"):
            val = getattr(self, name)
            if name not in given:
                continue
            if val is not None and not Path(val).is_absolute():
                setattr(self, name, str(base / val))

    def override(self, **kwargs) -> "PipelineConfig":
        return dataclasses.replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def validate(self, need_embeddings: bool = True) -> None:
        required = [("corpus_path", self.corpus_path)]
        if need_embeddings:
            required.append(("embeddings_path", self.embeddings_path))
        for name, val in required:
            if val is None:
                raise ConfigError(f"{name} is not set")
            if not Path(val).is_file():
                raise ConfigError(f"{name} does not exist: {val}")
        if self.stopwords_path is not None and not Path(self.stopwords_path).is_file():
            raise ConfigError(f"stopwords_path does not exist: {self.stopwords_path}")
        if self.corpus_format not in ("plain-lines", "json-lines"):
            raise ConfigError(f"unknown corpus format {self.corpus_format!r}")
        if self.k < 1 or self.top_words < 1:
            raise ConfigError("k and top_words must be >= 1")
        if self.num_clusters is not None and self.num_clusters < 1:
            raise ConfigError("num_clusters must be >= 1")
        try:
            self.train_config()
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            dropout=self.dropout,
            edge_dropout=self.edge_dropout,
            margin=self.margin,
            temperature=self.temperature,
            hinge_weight=self.hinge_weight,
            contrastive_weight=self.contrastive_weight,
            negatives_per_edge=self.negatives_per_edge,
            hidden_dims=tuple(self.hidden_dims),
            output_dim=self.output_dim,
            num_clusters=self.num_clusters or self.k,
            seed=stage_seed(self.seed, "gcn"),
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def stage_seed(seed: int, stage: str) -> int:
    """Derive an independent 63-bit seed for ``stage`` from the global seed."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1
