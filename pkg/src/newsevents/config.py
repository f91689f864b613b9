"""Pipeline configuration: a flat TOML file with one section per stage.

Key names are documented in the README. Paths are checked at load time;
corpus and word-vector paths may use the "builtin:<name>" scheme to refer to
the bundled data assets (builtin:corpus_200, builtin:corpus_300,
builtin:wordvec).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .llm_client import ProviderConfig

BUILTIN_FILES = {
    "builtin:corpus_200": "corpus_200.jsonl",
    "builtin:corpus_300": "corpus_300.jsonl",
    "builtin:wordvec": "wordvec_synthetic.txt",
    "builtin:demo_config": "config_demo.toml",
}

EMBED_BACKENDS = ("tfidf", "wordvec", "provider")
ALGORITHMS = ("kmeans", "pam", "agglomerative", "gmm", "hdbscan")
REDUCE_METHODS = ("none", "pca", "umap")


class ConfigFileError(ValueError):
    pass


def resolve_path(value: str) -> Path:
    """Expand builtin: references to the packaged data files."""
    if value in BUILTIN_FILES:
        return Path(str(resources.files("newsevents.data")
                        .joinpath(BUILTIN_FILES[value])))
    return Path(value)


@dataclass(frozen=True)
class CorpusConfig:
    path: str = "builtin:corpus_200"
    format: str = "jsonl"          # jsonl | gkg
    text_lookup: str = ""          # optional url->text JSONL for gkg


@dataclass(frozen=True)
class PreprocessConfig:
    lowercase: bool = True
    strip_urls: bool = True
    strip_digits: bool = True
    strip_symbols: bool = True
    stopwords: str = "builtin"     # builtin | none | <path>


@dataclass(frozen=True)
class EmbedConfig:
    backend: str = "tfidf"
    mode: str = "doc"              # doc | keyword-mean
    wordvec_path: str = ""
    min_df: int = 1
    max_vocab: int = 20000
    keyword_top_n: int = 5
    keyword_ngram_max: int = 2
    keyword_diversity: float = 0.3


@dataclass(frozen=True)
class ReduceConfig:
    method: str = "none"
    d: int = 2                     # pca target dimension
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_components: int = 2
    n_epochs: int = 200
    negative_sample_rate: int = 5


@dataclass(frozen=True)
class ClusterConfig:
    algorithm: str = "kmeans"
    k: int = 0                     # 0 = automatic (elbow / BIC)
    k_min: int = 2
    k_max: int = 12
    linkage: str = "average"
    min_cluster_size: int = 15
    min_samples: int = 0           # 0 = min_cluster_size
    restarts: int = 10
    reg: float = 1e-6


@dataclass(frozen=True)
class ValidateConfig:
    partitions: int = 5
    val_fraction: float = 0.2


@dataclass(frozen=True)
class PostdetectConfig:
    top_n_keywords: int = 5
    summary_word_limit: int = 10
    iptc_mode: str = "deterministic"   # deterministic | provider
    refine_keywords: bool = False


@dataclass(frozen=True)
class CompareConfig:
    backends: tuple[str, ...] = ("tfidf", "wordvec", "provider")
    algorithms: tuple[str, ...] = ALGORITHMS


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 42
    out_dir: str = "out"
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    embed: EmbedConfig = field(default_factory=EmbedConfig)
    reduce: ReduceConfig = field(default_factory=ReduceConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    validate: ValidateConfig = field(default_factory=ValidateConfig)
    postdetect: PostdetectConfig = field(default_factory=PostdetectConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)
    cache_dir: str = ""            # empty = <out_dir>/cache


def _build(cls, data: dict, section: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigFileError(
            f"[{section}] has unknown keys: {sorted(unknown)}")
    for key in ("backends", "algorithms"):
        if key in data and isinstance(data[key], list):
            data[key] = tuple(data[key])
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigFileError(f"[{section}]: {exc}") from exc


def _check(cfg: PipelineConfig) -> PipelineConfig:
    if cfg.corpus.format not in ("jsonl", "gkg"):
        raise ConfigFileError(f"corpus.format must be jsonl|gkg, got {cfg.corpus.format!r}")
    if cfg.embed.backend not in EMBED_BACKENDS:
        raise ConfigFileError(
            f"embed.backend must be one of {EMBED_BACKENDS}, got {cfg.embed.backend!r}")
    if cfg.embed.mode not in ("doc", "keyword-mean"):
        raise ConfigFileError(f"embed.mode must be doc|keyword-mean, got {cfg.embed.mode!r}")
    if cfg.reduce.method not in REDUCE_METHODS:
        raise ConfigFileError(
            f"reduce.method must be one of {REDUCE_METHODS}, got {cfg.reduce.method!r}")
    if cfg.cluster.algorithm not in ALGORITHMS:
        raise ConfigFileError(
            f"cluster.algorithm must be one of {ALGORITHMS}, got {cfg.cluster.algorithm!r}")
    for backend in cfg.compare.backends:
        if backend not in EMBED_BACKENDS:
            raise ConfigFileError(f"compare.backends: unknown backend {backend!r}")
    for algo in cfg.compare.algorithms:
        if algo not in ALGORITHMS:
            raise ConfigFileError(f"compare.algorithms: unknown algorithm {algo!r}")

    checked: list[tuple[str, str]] = [("corpus.path", cfg.corpus.path)]
    if cfg.corpus.text_lookup:
        checked.append(("corpus.text_lookup", cfg.corpus.text_lookup))
    needs_wordvec = cfg.embed.backend == "wordvec" or "wordvec" in cfg.compare.backends
    if cfg.embed.wordvec_path:
        checked.append(("embed.wordvec_path", cfg.embed.wordvec_path))
    elif needs_wordvec:
        raise ConfigFileError("embed.wordvec_path is required for the wordvec backend")
    if cfg.preprocess.stopwords not in ("builtin", "none"):
        checked.append(("preprocess.stopwords", cfg.preprocess.stopwords))
    for name, value in checked:
        if not resolve_path(value).exists():
            raise ConfigFileError(f"{name}: file not found: {value}")
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigFileError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigFileError(f"{path}: invalid TOML: {exc}") from exc
    sections = {
        "corpus": CorpusConfig, "preprocess": PreprocessConfig,
        "embed": EmbedConfig, "reduce": ReduceConfig, "cluster": ClusterConfig,
        "validate": ValidateConfig, "postdetect": PostdetectConfig,
        "provider": ProviderConfig, "compare": CompareConfig,
    }
    kwargs: dict = {}
    for name, value in raw.items():
        if name in sections:
            kwargs[name] = _build(sections[name], dict(value), name)
        elif name in ("seed", "out_dir", "cache_dir"):
            kwargs[name] = value
        elif name == "output" and isinstance(value, dict):
            if set(value) - {"dir"}:
                raise ConfigFileError(f"[output] has unknown keys: "
                                      f"{sorted(set(value) - {'dir'})}")
            kwargs["out_dir"] = value.get("dir", "out")
        else:
            raise ConfigFileError(f"unknown config section or key: {name!r}")
    return _check(PipelineConfig(**kwargs))
