"""Post-detection interpretation: cluster keywords, short summaries, and
IPTC topic assignment, yielding one event record per cluster.

Every step has a deterministic offline path; the provider-backed paths are
drop-in upgrades and fall back to the deterministic ones on failure.
"""
from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus
from .embed import Embedder, Keyword, cosine, load_prompt
from .llm_client import ProviderClient, ProviderError, mock_embed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IptcTaxonomy:
    """The 17 top-level media topics plus an alias table that folds common
    compound names (e.g. "Technology/Science") onto taxonomy labels."""

    topics: tuple[dict, ...]
    aliases: dict[str, str]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t["label"] for t in self.topics)

    def is_valid(self, label: str) -> bool:
        return label in self.labels


@dataclass(frozen=True)
class SummaryResult:
    text: str
    fallback: bool = False


@dataclass(frozen=True)
class EventCluster:
    cluster_id: int
    keywords: tuple[Keyword, ...]
    summary: str
    iptc_topic: str
    size: int
    member_ids: tuple[str, ...]
    representative_doc_ids: tuple[str, ...]
    summary_fallback: bool = False

    def to_json(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "keywords": [{"text": k.text, "score": k.score} for k in self.keywords],
            "summary": self.summary,
            "iptc_topic": self.iptc_topic,
            "size": self.size,
            "member_ids": list(self.member_ids),
            "representative_doc_ids": list(self.representative_doc_ids),
            "summary_fallback": self.summary_fallback,
        }


@dataclass(frozen=True)
class EventReport:
    clusters: tuple[EventCluster, ...]
    noise_count: int

    def to_json(self) -> dict:
        return {"clusters": [c.to_json() for c in self.clusters],
                "noise_count": self.noise_count}


def load_taxonomy() -> IptcTaxonomy:
    data = resources.files("newsevents.data")
    topics = json.loads(data.joinpath("iptc_topics.json").read_text("utf-8"))["topics"]
    aliases = json.loads(data.joinpath("iptc_aliases.json").read_text("utf-8"))
    labels = [t["label"] for t in topics]
    if len(set(labels)) != len(labels):
        raise ValueError("taxonomy labels must be unique")
    return IptcTaxonomy(topics=tuple(topics), aliases=aliases)


def label_clusters(corpus: Corpus, labels: Sequence[int],
                   top_n: int = 5) -> dict[int, list[Keyword]]:
    """Class-based TF-IDF keywords per cluster.

    Each cluster's concatenated tokens form one pseudo-document; term t in
    cluster c scores tf(t, c) * ln(1 + k / df_clusters(t)). Scores are scaled
    by the cluster's maximum so they land in [0, 1]; ties break
    lexicographically.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(corpus):
        raise ValueError(
            f"labels length {len(labels)} != corpus size {len(corpus)}")
    cluster_ids = sorted(c for c in set(labels.tolist()) if c >= 0)
    if not cluster_ids:
        raise ValueError("only noise: no clusters to label")
    tf: dict[int, Counter] = {c: Counter() for c in cluster_ids}
    for doc, c in zip(corpus.documents, labels):
        if c >= 0:
            tf[int(c)].update(doc.tokens)
    df: Counter = Counter()
    for c in cluster_ids:
        df.update(set(tf[c]))
    k = len(cluster_ids)
    out: dict[int, list[Keyword]] = {}
    for c in cluster_ids:
        scored = [(t, count * math.log(1.0 + k / df[t]))
                  for t, count in tf[c].items()]
        scored.sort(key=lambda item: (-item[1], item[0]))
        top = scored[:top_n]
        max_score = top[0][1] if top else 1.0
        out[c] = [Keyword(text=t, score=s / max_score if max_score > 0 else 0.0)
                  for t, s in top]
    return out


def representative_doc_indices(values: np.ndarray, labels: Sequence[int],
                               cluster_id: int, n: int = 3) -> list[int]:
    """Indices of up to n cluster members nearest the cluster centroid."""
    labels = np.asarray(labels, dtype=np.int64)
    members = np.flatnonzero(labels == cluster_id)
    if len(members) == 0:
        raise ValueError(f"cluster {cluster_id} has no members")
    centroid = values[members].mean(axis=0)
    dists = np.linalg.norm(values[members] - centroid, axis=1)
    order = np.argsort(dists, kind="stable")
    return [int(members[i]) for i in order[:n]]


def _truncate_words(text: str, limit: int) -> str:
    words = text.split()
    return " ".join(words[:limit])


def summarize_cluster(client: ProviderClient, representative_docs: Sequence[str],
                      word_limit: int = 10,
                      keywords: Sequence[Keyword] = ()) -> SummaryResult:
    """Ask the chat endpoint for a <= word_limit-word summary of the
    representative excerpts; the reply is trimmed to the limit. On provider
    failure the top-3 keywords (comma-joined) stand in, flagged as fallback.
    """
    if not representative_docs:
        raise ValueError("need at least one representative document")
    excerpts = "\n---\n".join(d[:500] for d in representative_docs)
    prompt = load_prompt("summarize.txt").format(
        word_limit=word_limit, excerpts=excerpts)
    try:
        reply = client.chat_complete(prompt, max_tokens=4 * word_limit,
                                     temperature=0.0)
    except ProviderError as exc:
        log.warning("summarization failed (%s); using keyword fallback", exc)
        fallback = ", ".join(k.text for k in keywords[:3]) if keywords \
            else _truncate_words(representative_docs[0], word_limit)
        return SummaryResult(text=fallback, fallback=True)
    return SummaryResult(text=_truncate_words(reply.strip(), word_limit),
                         fallback=False)


def _normalize_label(text: str) -> str:
    return re.sub(r"[^0-9a-z]+", " ", text.lower()).strip()


def _fallback_embedder(text: str) -> np.ndarray:
    return mock_embed(text, 32, "iptc-fallback")


def assign_iptc(keywords: Sequence[Keyword], mode: str = "deterministic",
                embedder: Embedder | None = None,
                client: ProviderClient | None = None,
                taxonomy: IptcTaxonomy | None = None) -> str:
    """Resolve a cluster's keywords to one taxonomy label. Deterministic mode
    embeds the joined keywords and every label and takes the best cosine
    match (ties: taxonomy order). Provider mode prompts with all labels and
    matches the reply case-insensitively against labels, then aliases; an
    unmatched reply falls back to deterministic mode. Always returns a
    taxonomy label."""
    if not keywords:
        raise ValueError("keywords must be non-empty")
    if taxonomy is None:
        taxonomy = load_taxonomy()
    if mode not in ("deterministic", "provider"):
        raise ValueError(f"mode must be deterministic|provider, got {mode!r}")

    if mode == "provider":
        if client is None:
            raise ValueError("provider mode needs a client")
        prompt = load_prompt("iptc.txt").format(
            keywords=", ".join(k.text for k in keywords),
            topics="\n".join(taxonomy.labels))
        try:
            reply = _normalize_label(client.chat_complete(prompt, max_tokens=16,
                                                          temperature=0.0))
            for label in taxonomy.labels:
                if reply == _normalize_label(label):
                    return label
            for alias, label in taxonomy.aliases.items():
                if reply == _normalize_label(alias):
                    return label
            log.warning("provider topic reply %r not in taxonomy; "
                        "falling back to deterministic match", reply)
        except ProviderError as exc:
            log.warning("provider topic assignment failed (%s); "
                        "falling back to deterministic match", exc)

    embed = embedder if embedder is not None else _fallback_embedder
    query = embed(" ".join(k.text for k in keywords))
    best_label = taxonomy.labels[0]
    best_sim = -np.inf
    for label in taxonomy.labels:
        sim = cosine(embed(label), query)
        if sim > best_sim:
            best_sim = sim
            best_label = label
    return best_label


def build_event_report(corpus: Corpus, labels: Sequence[int],
                       keywords: Mapping[int, Sequence[Keyword]],
                       summaries: Mapping[int, SummaryResult],
                       topics: Mapping[int, str],
                       representative_ids: Mapping[int, Sequence[str]] | None = None,
                       ) -> EventReport:
    """Assemble one EventCluster per non-noise cluster, largest first.
    keywords/summaries/topics must cover exactly the non-noise cluster ids."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(corpus):
        raise ValueError(
            f"labels length {len(labels)} != corpus size {len(corpus)}")
    cluster_ids = sorted(c for c in set(labels.tolist()) if c >= 0)
    for name, mapping in (("keywords", keywords), ("summaries", summaries),
                          ("topics", topics)):
        if sorted(mapping.keys()) != cluster_ids:
            raise ValueError(
                f"{name} ids {sorted(mapping.keys())} do not align with "
                f"cluster ids {cluster_ids}")
    taxonomy = load_taxonomy()
    clusters = []
    for c in cluster_ids:
        member_ids = tuple(corpus.ids[i] for i in np.flatnonzero(labels == c))
        topic = topics[c]
        if not taxonomy.is_valid(topic):
            raise ValueError(f"cluster {c}: topic {topic!r} not in taxonomy")
        summary = summaries[c]
        rep_ids = tuple(representative_ids.get(c, ())) if representative_ids else ()
        clusters.append(EventCluster(
            cluster_id=c,
            keywords=tuple(keywords[c]),
            summary=summary.text,
            iptc_topic=topic,
            size=len(member_ids),
            member_ids=member_ids,
            representative_doc_ids=rep_ids,
            summary_fallback=summary.fallback,
        ))
    clusters.sort(key=lambda e: (-e.size, e.cluster_id))
    return EventReport(clusters=tuple(clusters),
                       noise_count=int(np.sum(labels == -1)))


def format_event_table(report: EventReport, keyword_limit: int = 4,
                       summary_limit: int = 60) -> str:
    """Aligned-column text table of the event report."""
    headers = ("cluster", "size", "keywords", "summary", "iptc_topic")
    rows = []
    for ev in report.clusters:
        kw = ", ".join(k.text for k in ev.keywords[:keyword_limit])
        summary = ev.summary if len(ev.summary) <= summary_limit \
            else ev.summary[:summary_limit - 1] + "…"
        rows.append((str(ev.cluster_id), str(ev.size), kw, summary, ev.iptc_topic))
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    if report.noise_count:
        lines.append(f"noise: {report.noise_count} document(s)")
    return "\n".join(lines) + "\n"
