"""Command-line interface: config-driven pipeline runner with per-stage
subcommands and SVG report plots.

    newsevents run      --config cfg.toml [--out-dir out] [--seed N] [--mock]
    newsevents ingest|embed|reduce|cluster|validate|report   (single stage)
    newsevents compare  --config cfg.toml        (backend x algorithm grid)
    newsevents plot     --artifact F --kind scatter|elbow|bars|dendrogram|condensed

Stage subcommands read their inputs from earlier stages' artifacts in the
output directory. Exit codes: 0 success, 1 stage failure, 2 bad config or
usage.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pipeline
from .cluster import CondensedTree, MergeTable, WssCurve
from .config import ConfigFileError, PipelineConfig, load_config, resolve_path
from .corpus import load_clean_corpus
from .matrix import load_matrix
from .plots import (
    plot_condensed_tree,
    plot_dendrogram,
    plot_elbow,
    plot_grouped_bars,
    plot_scatter,
)

log = logging.getLogger(__name__)

STAGE_COMMANDS = ("ingest", "embed", "reduce", "cluster", "validate", "report")


def _load_cfg(args: argparse.Namespace) -> tuple[PipelineConfig, Path]:
    cfg = load_config(resolve_path(args.config))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.mock:
        cfg = replace(cfg, provider=replace(cfg.provider, mode="mock"))
    out_dir = Path(args.out_dir) if args.out_dir else Path(cfg.out_dir)
    return cfg, out_dir


def _need(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(
            f"{path} not found; run the {produced_by!r} stage first")
    return path


def _load_labels(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["doc_id", "cluster"]:
            raise ValueError(f"{path}: unexpected header {header}")
        ids, labels = [], []
        for row in reader:
            ids.append(row[0])
            labels.append(int(row[1]))
    return ids, np.asarray(labels, dtype=np.int64)


def _cluster_input(out_dir: Path) -> Path:
    reduced = out_dir / "reduced.embmat"
    return reduced if reduced.exists() else _need(out_dir / "embeddings.embmat",
                                                  "embed")


def cmd_stage(stage: str, args: argparse.Namespace) -> int:
    cfg, out = _load_cfg(args)
    out.mkdir(parents=True, exist_ok=True)
    client = pipeline.make_client(cfg, out)
    if stage == "ingest":
        corpus = pipeline.run_ingest(cfg, out)
        print(f"ingested {len(corpus)} documents -> {out / 'corpus_clean.jsonl'}")
        return 0
    corpus = load_clean_corpus(_need(out / "corpus_clean.jsonl", "ingest"))
    if stage == "embed":
        matrix = pipeline.run_embed(cfg, out, corpus, client)
        print(f"embedded {matrix.n} x {matrix.n_features} "
              f"({matrix.backend}) -> {out / 'embeddings.embmat'}")
        return 0
    if stage == "reduce":
        matrix = load_matrix(_need(out / "embeddings.embmat", "embed"))
        reduced = pipeline.run_reduce(cfg, out, matrix)
        if cfg.reduce.method == "none":
            print("reduce.method = none; nothing to do")
        else:
            print(f"reduced to {reduced.n_features} dims -> {out / 'reduced.embmat'}")
        return 0
    matrix = load_matrix(_cluster_input(out))
    if stage == "cluster":
        result = pipeline.run_cluster(cfg, out, matrix)
        print(f"{result.algorithm}: {result.k} clusters, "
              f"{result.n_noise} noise -> {out / 'assignments.csv'}")
        return 0
    if stage == "validate":
        profile = pipeline.run_validate(cfg, out, matrix, corpus)
        print(f"stability: mean={profile.mean:.6f} stddev={profile.stddev:.6f} "
              f"-> {out / 'csai_report.json'}")
        return 0
    # report
    ids, labels = _load_labels(_need(out / "assignments.csv", "cluster"))
    if list(ids) != list(matrix.doc_ids):
        raise ValueError("assignments.csv does not match the embedding matrix")
    report = pipeline.run_postdetect(
        cfg, out, corpus, matrix, labels, client,
        embedder=pipeline._iptc_embedder(cfg, client))
    print((out / "event_table.txt").read_text(encoding="utf-8"))
    print(f"{len(report.clusters)} event clusters -> {out / 'event_report.json'}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg, out = _load_cfg(args)
    result = pipeline.run(cfg, out)
    table = out / "event_table.txt"
    if result.exit_code == 0 and table.exists():
        print(table.read_text(encoding="utf-8"))
    failed = [s for s, st in result.manifest["stages"].items()
              if st.startswith("failed")]
    if failed:
        print(f"failed stage: {failed[0]}: "
              f"{result.manifest['stages'][failed[0]]}", file=sys.stderr)
    print(f"manifest -> {out / 'manifest.json'}")
    return result.exit_code


def cmd_compare(args: argparse.Namespace) -> int:
    cfg, out = _load_cfg(args)
    grid = pipeline.compare_embeddings(cfg, out)
    for cell in grid["cells"]:
        flag = "  <- best for backend" if cell["best_for_backend"] else ""
        print(f"{cell['backend']:10s} {cell['algorithm']:14s} "
              f"csai={cell['csai_mean']:.6f} (+/- {cell['csai_std']:.6f}){flag}")
    print(f"grid -> {out / 'compare_grid.csv'}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    artifact = Path(args.artifact)
    out_path = Path(args.out) if args.out else artifact.with_suffix(f".{args.kind}.svg")
    kind = args.kind
    if kind == "scatter":
        matrix = load_matrix(artifact)
        if args.labels:
            ids, labels = _load_labels(Path(args.labels))
            if list(ids) != list(matrix.doc_ids):
                raise ValueError("labels file does not match the matrix doc ids")
        else:
            labels = np.zeros(matrix.n, dtype=np.int64)
        plot_scatter(matrix.values, labels, out_path)
    elif kind == "elbow":
        data = json.loads(artifact.read_text(encoding="utf-8"))
        if "wss" not in data or "ks" not in data:
            raise ValueError(f"{artifact} is not a WSS curve artifact")
        plot_elbow(WssCurve(ks=tuple(data["ks"]), wss=tuple(data["wss"]),
                            chosen_k=data["chosen_k"]), out_path)
    elif kind == "bars":
        data = json.loads(artifact.read_text(encoding="utf-8"))
        if "cells" not in data:
            raise ValueError(f"{artifact} is not a comparison grid artifact")
        grid: dict[str, dict[str, float]] = {}
        for cell in data["cells"]:
            grid.setdefault(cell["backend"], {})[cell["algorithm"]] = cell["csai_mean"]
        plot_grouped_bars(grid, out_path)
    elif kind == "dendrogram":
        data = json.loads(artifact.read_text(encoding="utf-8"))
        if "merge_table" not in data:
            raise ValueError(f"{artifact} has no merge table "
                             "(need agglomerative cluster extras)")
        table = MergeTable(rows=tuple(tuple(r) for r in data["merge_table"]),
                           n_points=data["n_points"])
        plot_dendrogram(table, out_path)
    elif kind == "condensed":
        data = json.loads(artifact.read_text(encoding="utf-8"))
        if "condensed_tree" not in data:
            raise ValueError(f"{artifact} has no condensed tree "
                             "(need hdbscan cluster extras)")
        tree = CondensedTree(
            rows=tuple(tuple(r) for r in data["condensed_tree"]),
            stability={int(k): v for k, v in data["stability"].items()},
            selected=tuple(data["selected"]))
        plot_condensed_tree(tree, out_path)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown plot kind {kind!r}")
    print(f"wrote {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsevents",
        description="News event detection: embeddings, clustering, stability "
                    "validation, and event reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True,
                       help="TOML config path (or builtin:demo_config)")
        p.add_argument("--out-dir", default=None,
                       help="override the configured output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--mock", action="store_true",
                       help="force the offline provider mock")

    for name in ("run", "compare") + STAGE_COMMANDS:
        p = sub.add_parser(name)
        add_common(p)

    plot = sub.add_parser("plot", help="render an artifact as SVG")
    plot.add_argument("--artifact", required=True)
    plot.add_argument("--kind", required=True,
                      choices=["scatter", "elbow", "bars", "dendrogram",
                               "condensed"])
    plot.add_argument("--labels", default=None,
                      help="assignments.csv for scatter coloring")
    plot.add_argument("--out", default=None, help="output SVG path")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "compare":
            return cmd_compare(args)
        if args.command == "plot":
            return cmd_plot(args)
        return cmd_stage(args.command, args)
    except ConfigFileError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
