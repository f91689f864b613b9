"""End-to-end pipeline: ingest -> embed -> reduce -> cluster -> validate ->
postdetect, plus the embedding/algorithm comparison grid.

Every run writes a manifest listing each artifact with its SHA-256, so
repeated runs with one config and seed can be compared byte for byte. All
stage randomness derives from the single config seed.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import corpus as corpus_mod
from . import embed as embed_mod
from .cluster import (
    ClusteringResult,
    CondensedTree,
    GmmModel,
    KmeansDiagnostics,
    MergeTable,
    WssCurve,
    agglomerative,
    elbow_select_k,
    gmm_em,
    gmm_select_k_bic,
    hdbscan,
    kmeans,
    pam,
)
from .config import PipelineConfig, resolve_path
from .corpus import Corpus, PartitionPlan, split_partitions
from .dimred import UmapParams, pca_fit, pca_transform, umap_fit_transform
from .llm_client import ProviderClient
from .matrix import EmbeddingMatrix, save_matrix
from .plots import (
    plot_condensed_tree,
    plot_dendrogram,
    plot_elbow,
    plot_grouped_bars,
    plot_scatter,
)
from .postdetect import (
    EventReport,
    assign_iptc,
    build_event_report,
    format_event_table,
    label_clusters,
    load_taxonomy,
    representative_doc_indices,
    summarize_cluster,
)
from .util import new_rng, sha256_hex
from .validate import StabilityProfile, stability_profile

log = logging.getLogger(__name__)

STAGE_ORDER = ("ingest", "embed", "reduce", "cluster", "validate", "postdetect")


def stage_seed(seed: int, stage: str) -> int:
    """Derive an independent integer seed for one pipeline stage."""
    return int(new_rng(seed, stage).integers(0, 2 ** 62))


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunResult:
    exit_code: int
    manifest: dict
    out_dir: Path


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, ensure_ascii=False, sort_keys=True,
                               indent=1) + "\n", encoding="utf-8")


def make_client(cfg: PipelineConfig, out_dir: Path, **overrides) -> ProviderClient:
    cache = Path(cfg.cache_dir) if cfg.cache_dir else out_dir / "cache"
    return ProviderClient(cfg.provider, cache_dir=cache, **overrides)


# -- stages ----------------------------------------------------------------

def run_ingest(cfg: PipelineConfig, out_dir: Path) -> Corpus:
    path = resolve_path(cfg.corpus.path)
    if cfg.corpus.format == "gkg":
        lookup = None
        if cfg.corpus.text_lookup:
            with open(resolve_path(cfg.corpus.text_lookup), "rb") as fh:
                lookup = corpus_mod.load_url_text_lookup(fh)
        with open(path, "rb") as fh:
            docs, skipped = corpus_mod.parse_gkg(fh, strict=False,
                                                 url_text_lookup=lookup)
        if skipped:
            log.warning("gkg ingest skipped %d malformed rows", skipped)
    else:
        with open(path, "rb") as fh:
            docs = corpus_mod.load_corpus(fh)
    if cfg.preprocess.stopwords == "none":
        stopwords = frozenset()
    elif cfg.preprocess.stopwords == "builtin":
        stopwords = corpus_mod.load_stopwords()
    else:
        stopwords = corpus_mod.load_stopwords(resolve_path(cfg.preprocess.stopwords))
    opts = corpus_mod.PreprocessOptions(
        lowercase=cfg.preprocess.lowercase,
        strip_urls=cfg.preprocess.strip_urls,
        strip_digits=cfg.preprocess.strip_digits,
        strip_symbols=cfg.preprocess.strip_symbols,
        stopword_list=stopwords,
    )
    corpus = corpus_mod.preprocess_corpus(docs, opts, provenance=str(path))
    corpus_mod.save_clean_corpus(corpus, out_dir / "corpus_clean.jsonl")
    return corpus


def _doc_embedder(cfg: PipelineConfig, corpus: Corpus,
                  client: ProviderClient) -> tuple[EmbeddingMatrix, embed_mod.Embedder]:
    """Embed all documents with the configured backend; also return a
    text-level embedding function in the same space."""
    backend = cfg.embed.backend
    if backend == "tfidf":
        model = embed_mod.fit_tfidf(corpus, min_df=cfg.embed.min_df,
                                    max_vocab=cfg.embed.max_vocab)
        matrix = embed_mod.tfidf_transform(model, corpus, l2_normalize=True)
        return matrix, embed_mod.embedder_from_tfidf(model)
    if backend == "wordvec":
        with open(resolve_path(cfg.embed.wordvec_path), encoding="utf-8") as fh:
            table = embed_mod.load_word_vectors(fh)
        matrix = embed_mod.average_word_embedding(table, corpus)
        return matrix, embed_mod.embedder_from_table(table)
    matrix = embed_mod.provider_embed(client, list(corpus.texts),
                                      doc_ids=corpus.ids)
    return matrix, lambda text: client.embed_texts([text])[0]


def run_embed(cfg: PipelineConfig, out_dir: Path, corpus: Corpus,
              client: ProviderClient) -> EmbeddingMatrix:
    matrix, embedder = _doc_embedder(cfg, corpus, client)
    if cfg.embed.mode == "keyword-mean":
        stopwords = corpus_mod.load_stopwords()
        rows = np.array(matrix.values)
        for i, doc in enumerate(corpus.documents):
            if doc.degenerate:
                continue
            keywords = embed_mod.extract_keywords(
                doc, embedder, top_n=cfg.embed.keyword_top_n,
                ngram_max=cfg.embed.keyword_ngram_max,
                diversity=cfg.embed.keyword_diversity, stopwords=stopwords)
            if keywords:
                rows[i] = np.mean([embedder(k.text) for k in keywords], axis=0)
        matrix = matrix.with_values(rows, model_id=matrix.model_id + "+kwmean")
    save_matrix(matrix, out_dir / "embeddings.embmat")
    return matrix


def run_reduce(cfg: PipelineConfig, out_dir: Path,
               matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    if cfg.reduce.method == "none":
        return matrix
    if cfg.reduce.method == "pca":
        model = pca_fit(matrix, cfg.reduce.d)
        reduced = pca_transform(model, matrix)
    else:
        params = UmapParams(
            n_neighbors=cfg.reduce.n_neighbors, min_dist=cfg.reduce.min_dist,
            n_components=cfg.reduce.n_components, n_epochs=cfg.reduce.n_epochs,
            negative_sample_rate=cfg.reduce.negative_sample_rate,
            seed=stage_seed(cfg.seed, "reduce"))
        reduced = umap_fit_transform(matrix, params)
    save_matrix(reduced, out_dir / "reduced.embmat")
    return reduced


def resolve_k(cfg: PipelineConfig, matrix: EmbeddingMatrix,
              seed: int) -> tuple[int, WssCurve | None]:
    """Configured k, or automatic selection: elbow over the WSS curve for
    kmeans/pam/agglomerative, BIC for gmm. hdbscan never needs one."""
    algo = cfg.cluster.algorithm
    if algo == "hdbscan":
        return 0, None
    if cfg.cluster.k > 0:
        return cfg.cluster.k, None
    if algo == "gmm":
        k, _ = gmm_select_k_bic(matrix.values, cfg.cluster.k_min,
                                cfg.cluster.k_max, seed=seed, reg=cfg.cluster.reg)
        return k, None
    curve = elbow_select_k(matrix.values, cfg.cluster.k_min, cfg.cluster.k_max,
                           seed=seed, restarts=cfg.cluster.restarts)
    return curve.chosen_k, curve


def make_fitter(cfg: PipelineConfig, k: int,
                seed: int) -> Callable[[np.ndarray], ClusteringResult]:
    algo = cfg.cluster.algorithm
    cl = cfg.cluster
    if algo == "kmeans":
        return lambda values: kmeans(values, k, seed=seed, restarts=cl.restarts)
    if algo == "pam":
        return lambda values: pam(values, k, seed=seed)
    if algo == "agglomerative":
        return lambda values: agglomerative(values, cl.linkage, n_clusters=k,
                                            seed=seed)
    if algo == "gmm":
        return lambda values: gmm_em(values, k, seed=seed, reg=cl.reg)
    min_samples = cl.min_samples if cl.min_samples > 0 else None
    return lambda values: hdbscan(values, min_cluster_size=cl.min_cluster_size,
                                  min_samples=min_samples, seed=seed)


def _extras_json(result: ClusteringResult) -> dict:
    out: dict = {"algorithm": result.algorithm, "k": result.k,
                 "seed": result.seed}
    extras = result.extras
    if isinstance(extras, KmeansDiagnostics):
        out["wss"] = extras.wss
        out["wss_trace"] = list(extras.wss_trace)
    elif isinstance(extras, MergeTable):
        out["n_points"] = extras.n_points
        out["merge_table"] = [list(row) for row in extras.rows]
    elif isinstance(extras, GmmModel):
        out["weights"] = extras.weights.tolist()
        out["means"] = extras.means.tolist()
        out["covariances"] = extras.covariances.tolist()
        out["loglik_trace"] = list(extras.loglik_trace)
    elif isinstance(extras, CondensedTree):
        out["condensed_tree"] = [list(row) for row in extras.rows]
        out["stability"] = {str(k): v for k, v in sorted(extras.stability.items())}
        out["selected"] = list(extras.selected)
    return out


def run_cluster(cfg: PipelineConfig, out_dir: Path,
                matrix: EmbeddingMatrix) -> ClusteringResult:
    seed = stage_seed(cfg.seed, "cluster")
    k, curve = resolve_k(cfg, matrix, seed)
    if curve is not None:
        _write_json({"ks": list(curve.ks), "wss": list(curve.wss),
                     "chosen_k": curve.chosen_k}, out_dir / "wss_curve.json")
    result = make_fitter(cfg, k, seed)(matrix.values)
    with open(out_dir / "assignments.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "cluster"])
        for doc_id, label in zip(matrix.doc_ids, result.labels):
            writer.writerow([doc_id, int(label)])
    _write_json(_extras_json(result), out_dir / "cluster_extras.json")
    return result


def run_validate(cfg: PipelineConfig, out_dir: Path, matrix: EmbeddingMatrix,
                 corpus: Corpus) -> StabilityProfile:
    plan = split_partitions(corpus, K=cfg.validate.partitions,
                            val_fraction=cfg.validate.val_fraction,
                            seed=cfg.seed)
    seed = stage_seed(cfg.seed, "cluster")
    k, _ = resolve_k(cfg, matrix, seed)
    profile = stability_profile(matrix, make_fitter(cfg, k, seed), plan)
    payload = profile.report.to_json()
    payload["per_partition_values"] = list(profile.values)
    payload["mean"] = profile.mean
    payload["stddev"] = profile.stddev
    _write_json(payload, out_dir / "csai_report.json")
    return profile


def run_postdetect(cfg: PipelineConfig, out_dir: Path, corpus: Corpus,
                   matrix: EmbeddingMatrix, labels: np.ndarray,
                   client: ProviderClient,
                   embedder: embed_mod.Embedder | None = None) -> EventReport:
    keywords = label_clusters(corpus, labels, top_n=cfg.postdetect.top_n_keywords)
    if cfg.postdetect.refine_keywords:
        docs_by_cluster = {c: " ".join(
            corpus.documents[i].text for i in np.flatnonzero(labels == c)[:3])
            for c in keywords}
        keywords = {c: embed_mod.refine_keywords(client, kws,
                                                 docs_by_cluster[c][:500])
                    for c, kws in keywords.items()}
    taxonomy = load_taxonomy()
    summaries = {}
    topics = {}
    rep_ids = {}
    for c in sorted(keywords):
        rep_idx = representative_doc_indices(matrix.values, labels, c, n=3)
        rep_ids[c] = [corpus.ids[i] for i in rep_idx]
        rep_texts = [corpus.documents[i].text for i in rep_idx]
        summaries[c] = summarize_cluster(
            client, rep_texts, word_limit=cfg.postdetect.summary_word_limit,
            keywords=keywords[c])
        topics[c] = assign_iptc(
            keywords[c], mode=cfg.postdetect.iptc_mode, embedder=embedder,
            client=client, taxonomy=taxonomy)
    report = build_event_report(corpus, labels, keywords, summaries, topics,
                                representative_ids=rep_ids)
    _write_json(report.to_json(), out_dir / "event_report.json")
    (out_dir / "event_table.txt").write_text(format_event_table(report),
                                             encoding="utf-8")
    return report


def _iptc_embedder(cfg: PipelineConfig, client: ProviderClient) -> embed_mod.Embedder | None:
    """Best available text embedder for deterministic topic matching: the
    configured word-vector table when present, else provider embeddings,
    else None (postdetect falls back to stable hash vectors)."""
    if cfg.embed.wordvec_path:
        with open(resolve_path(cfg.embed.wordvec_path), encoding="utf-8") as fh:
            table = embed_mod.load_word_vectors(fh)
        return embed_mod.embedder_from_table(table)
    if cfg.embed.backend == "provider":
        return lambda text: client.embed_texts([text])[0]
    return None


def _emit_plots(out_dir: Path, matrix: EmbeddingMatrix,
                result: ClusteringResult) -> None:
    if matrix.values.shape[1] == 2:
        plot_scatter(matrix.values, result.labels, out_dir / "scatter.svg")
    curve_path = out_dir / "wss_curve.json"
    if curve_path.exists():
        data = json.loads(curve_path.read_text(encoding="utf-8"))
        plot_elbow(WssCurve(ks=tuple(data["ks"]), wss=tuple(data["wss"]),
                            chosen_k=data["chosen_k"]), out_dir / "elbow.svg")
    if isinstance(result.extras, MergeTable):
        plot_dendrogram(result.extras, out_dir / "dendrogram.svg")
    if isinstance(result.extras, CondensedTree):
        plot_condensed_tree(result.extras, out_dir / "condensed_tree.svg")


def write_manifest(out_dir: Path, seed: int, stages: dict[str, str]) -> dict:
    artifacts = {}
    for path in sorted(out_dir.rglob("*")):
        if not path.is_file() or path.name == "manifest.json":
            continue
        rel = str(path.relative_to(out_dir))
        if rel.startswith("cache/"):
            continue
        artifacts[rel] = {"sha256": sha256_hex(path.read_bytes())}
    manifest = {"seed": seed, "stages": stages, "artifacts": artifacts}
    _write_json(manifest, out_dir / "manifest.json")
    return manifest


def run(cfg: PipelineConfig, out_dir: str | Path | None = None) -> RunResult:
    """Execute the full pipeline; on stage failure, keep partial artifacts
    and mark the failed stage in the manifest."""
    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    client = make_client(cfg, out)
    stages = {name: "pending" for name in STAGE_ORDER}
    state: dict = {}

    def execute(name: str, fn: Callable[[], object]) -> object:
        try:
            value = fn()
        except Exception as exc:
            stages[name] = f"failed: {exc}"
            raise StageFailure(name, exc) from exc
        stages[name] = "ok"
        return value

    try:
        state["corpus"] = execute("ingest", lambda: run_ingest(cfg, out))
        state["embeddings"] = execute(
            "embed", lambda: run_embed(cfg, out, state["corpus"], client))
        state["matrix"] = execute(
            "reduce", lambda: run_reduce(cfg, out, state["embeddings"]))
        state["clustering"] = execute(
            "cluster", lambda: run_cluster(cfg, out, state["matrix"]))
        state["profile"] = execute(
            "validate", lambda: run_validate(cfg, out, state["matrix"],
                                             state["corpus"]))
        state["events"] = execute(
            "postdetect", lambda: run_postdetect(
                cfg, out, state["corpus"], state["matrix"],
                state["clustering"].labels, client,
                embedder=_iptc_embedder(cfg, client)))
        _emit_plots(out, state["matrix"], state["clustering"])
    except StageFailure as failure:
        log.error("%s", failure)
        manifest = write_manifest(out, cfg.seed, stages)
        return RunResult(exit_code=1, manifest=manifest, out_dir=out)
    manifest = write_manifest(out, cfg.seed, stages)
    return RunResult(exit_code=0, manifest=manifest, out_dir=out)


# -- embedding / algorithm comparison --------------------------------------

def compare_embeddings(cfg: PipelineConfig,
                       out_dir: str | Path | None = None) -> dict:
    """Cross product of compare.backends x compare.algorithms, each cell
    scored with the K-partition stability protocol on the shared plan.
    Writes compare_grid.csv, compare_grid.json, and compare_bars.svg; flags
    the best (lowest mean) algorithm per backend."""
    if not cfg.compare.backends or not cfg.compare.algorithms:
        raise ValueError("compare needs at least one backend and one algorithm")
    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    client = make_client(cfg, out)
    corpus = run_ingest(cfg, out)
    plan = split_partitions(corpus, K=cfg.validate.partitions,
                            val_fraction=cfg.validate.val_fraction,
                            seed=cfg.seed)
    seed = stage_seed(cfg.seed, "cluster")

    cells = []
    for backend in cfg.compare.backends:
        bcfg = _with_backend(cfg, backend)
        matrix, _ = _doc_embedder(bcfg, corpus, client)
        matrix = run_reduce(bcfg, out, matrix) if bcfg.reduce.method != "none" \
            else matrix
        for algorithm in cfg.compare.algorithms:
            acfg = _with_algorithm(bcfg, algorithm)
            k, _ = resolve_k(acfg, matrix, seed)
            profile = stability_profile(matrix, make_fitter(acfg, k, seed), plan)
            cells.append({
                "backend": backend, "algorithm": algorithm,
                "csai_mean": profile.mean, "csai_std": profile.stddev,
                "values": list(profile.values),
            })
    for backend in cfg.compare.backends:
        mine = [c for c in cells if c["backend"] == backend]
        # a single algorithm is no comparison; flag only real winners
        best = min(mine, key=lambda c: c["csai_mean"]) if len(mine) > 1 else None
        for c in mine:
            c["best_for_backend"] = c is best

    with open(out / "compare_grid.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["backend", "algorithm", "csai_mean", "csai_std",
                         "best_for_backend"])
        for c in cells:
            writer.writerow([c["backend"], c["algorithm"],
                             f"{c['csai_mean']:.10g}", f"{c['csai_std']:.10g}",
                             int(c["best_for_backend"])])
    grid_json = {"seed": cfg.seed, "cells": cells}
    _write_json(grid_json, out / "compare_grid.json")
    grid = {}
    for c in cells:
        grid.setdefault(c["backend"], {})[c["algorithm"]] = c["csai_mean"]
    plot_grouped_bars(grid, out / "compare_bars.svg")
    write_manifest(out, cfg.seed, {"compare": "ok"})
    return grid_json


def _with_backend(cfg: PipelineConfig, backend: str) -> PipelineConfig:
    from dataclasses import replace
    return replace(cfg, embed=replace(cfg.embed, backend=backend))


def _with_algorithm(cfg: PipelineConfig, algorithm: str) -> PipelineConfig:
    from dataclasses import replace
    return replace(cfg, cluster=replace(cfg.cluster, algorithm=algorithm))
