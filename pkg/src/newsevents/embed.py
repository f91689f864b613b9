"""Document embedding backends and embedding-based keyword extraction.

Three interchangeable backends produce an EmbeddingMatrix: smooth-idf
TF-IDF, pretrained word-vector averaging, and a remote provider (or its
offline mock). Keyword extraction scores candidate 1-2 grams by cosine
similarity to the document vector and selects with maximal marginal
relevance.
"""
from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import CleanDocument, Corpus, load_stopwords
from .llm_client import ProviderClient, ProviderError
from .matrix import EmbeddingMatrix

log = logging.getLogger(__name__)

Embedder = Callable[[str], np.ndarray]


@dataclass(frozen=True)
class TfidfModel:
    """Vocabulary plus smooth idf weights: idf(t) = ln((1+n)/(1+df(t))) + 1."""

    vocabulary: dict[str, int]
    idf: np.ndarray
    n_docs: int
    doc_freq: np.ndarray


@dataclass(frozen=True)
class WordVectorTable:
    dim: int
    vectors: dict[str, np.ndarray]
    duplicates: int = 0

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token)


@dataclass(frozen=True)
class Keyword:
    text: str
    score: float


def fit_tfidf(corpus: Corpus, min_df: int = 1, max_vocab: int = 50000) -> TfidfModel:
    """Vocabulary = terms with document frequency >= min_df, truncated to the
    max_vocab highest-df terms (ties broken lexicographically), with indices
    assigned in lexicographic term order."""
    if len(corpus) == 0:
        raise ValueError("cannot fit tf-idf on an empty corpus")
    df_counter: Counter[str] = Counter()
    for doc in corpus.documents:
        df_counter.update(set(doc.tokens))
    kept = [t for t, df in df_counter.items() if df >= min_df]
    if not kept:
        raise ValueError(f"empty vocabulary: no term has doc_freq >= {min_df}")
    # highest df first, lexicographic within equal df, then cap
    kept.sort(key=lambda t: (-df_counter[t], t))
    kept = sorted(kept[:max_vocab])
    vocabulary = {t: i for i, t in enumerate(kept)}
    doc_freq = np.array([df_counter[t] for t in kept], dtype=np.int64)
    n = len(corpus)
    idf = np.log((1.0 + n) / (1.0 + doc_freq)) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, n_docs=n, doc_freq=doc_freq)


def _tfidf_row(model: TfidfModel, tokens: Iterable[str]) -> np.ndarray:
    row = np.zeros(len(model.vocabulary))
    for token, count in Counter(tokens).items():
        col = model.vocabulary.get(token)
        if col is not None:
            row[col] = count * model.idf[col]
    return row


def tfidf_transform(model: TfidfModel, corpus: Corpus,
                    l2_normalize: bool = True) -> EmbeddingMatrix:
    """Rows are term_count * idf, optionally L2-normalized. Out-of-vocabulary
    terms are ignored; an all-OOV document keeps a zero row and is flagged."""
    values = np.zeros((len(corpus), len(model.vocabulary)))
    degenerate = []
    for i, doc in enumerate(corpus.documents):
        row = _tfidf_row(model, doc.tokens)
        norm = np.linalg.norm(row)
        if norm == 0.0:
            degenerate.append(i)
        elif l2_normalize:
            row = row / norm
        values[i] = row
    return EmbeddingMatrix(values=values, doc_ids=corpus.ids, backend="tfidf",
                           model_id=f"tfidf-v{len(model.vocabulary)}",
                           degenerate_rows=tuple(degenerate))


def load_word_vectors(text_stream: Iterable[str]) -> WordVectorTable:
    """Parse "token v1 ... vD" lines; dimension is inferred from the first
    line and enforced afterwards. Duplicate tokens: last occurrence wins."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    duplicates = 0
    for lineno, line in enumerate(text_stream, start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(" ")
        token, vals = parts[0], parts[1:]
        if dim is None:
            dim = len(vals)
            if dim < 1:
                raise ValueError(f"line {lineno}: no vector components")
        elif len(vals) != dim:
            raise ValueError(
                f"line {lineno}: expected {dim} components, got {len(vals)}")
        if token in vectors:
            duplicates += 1
            log.warning("word vector for %r redefined (line %d)", token, lineno)
        vec = np.array([float(v) for v in vals])
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"line {lineno}: non-finite vector component")
        vectors[token] = vec
    if dim is None:
        raise ValueError("empty word-vector stream")
    return WordVectorTable(dim=dim, vectors=vectors, duplicates=duplicates)


def average_word_embedding(table: WordVectorTable, corpus: Corpus) -> EmbeddingMatrix:
    """Row = arithmetic mean of in-vocabulary token vectors; all-OOV rows are
    zero and flagged."""
    values = np.zeros((len(corpus), table.dim))
    degenerate = []
    for i, doc in enumerate(corpus.documents):
        hits = [table.vectors[t] for t in doc.tokens if t in table.vectors]
        if hits:
            values[i] = np.mean(hits, axis=0)
        else:
            degenerate.append(i)
    return EmbeddingMatrix(values=values, doc_ids=corpus.ids, backend="wordvec",
                           model_id=f"wordvec-d{table.dim}",
                           degenerate_rows=tuple(degenerate))


def provider_embed(client: ProviderClient, texts: Sequence[str],
                   model_id: str | None = None,
                   doc_ids: Sequence[str] | None = None) -> EmbeddingMatrix:
    """Embed texts through the provider client (cached, batched, retried)."""
    if not texts:
        raise ValueError("texts must be non-empty")
    model = model_id if model_id is not None else client.cfg.embed_model
    vectors = client.embed_texts(texts, model=model)
    values = np.vstack(vectors)
    if doc_ids is None:
        doc_ids = tuple(str(i) for i in range(len(texts)))
    degenerate = tuple(int(i) for i in np.flatnonzero(~values.any(axis=1)))
    return EmbeddingMatrix(values=values, doc_ids=tuple(doc_ids),
                           backend="provider", model_id=model,
                           degenerate_rows=degenerate)


def embedder_from_table(table: WordVectorTable) -> Embedder:
    """Text -> mean of in-vocabulary word vectors (zero vector if none)."""

    def embed(text: str) -> np.ndarray:
        toks = [t for t in text.lower().split() if t in table.vectors]
        if not toks:
            return np.zeros(table.dim)
        return np.mean([table.vectors[t] for t in toks], axis=0)

    return embed


def embedder_from_tfidf(model: TfidfModel) -> Embedder:
    def embed(text: str) -> np.ndarray:
        return _tfidf_row(model, text.lower().split())

    return embed


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity with the convention that a zero vector scores 0."""
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _candidate_phrases(tokens: Sequence[str], ngram_max: int,
                       stopwords: frozenset[str]) -> list[str]:
    """Distinct 1..ngram_max-grams, in first-occurrence order, whose boundary
    tokens are not stopwords."""
    seen: set[str] = set()
    out: list[str] = []
    for size in range(1, ngram_max + 1):
        for start in range(len(tokens) - size + 1):
            gram = tokens[start:start + size]
            if gram[0] in stopwords or gram[-1] in stopwords:
                continue
            phrase = " ".join(gram)
            if phrase not in seen:
                seen.add(phrase)
                out.append(phrase)
    return out


def extract_keywords(doc: CleanDocument, embedder: Embedder, top_n: int = 5,
                     ngram_max: int = 2, diversity: float = 0.3,
                     stopwords: frozenset[str] | None = None) -> list[Keyword]:
    """Top keywords by maximal marginal relevance.

    Candidates are scored by cosine similarity to the document vector;
    selection maximizes lambda*relevance - (1-lambda)*max-similarity-to-chosen
    with lambda = 1 - diversity, so diversity=0 reduces to plain top-n.
    Score ties break lexicographically.
    """
    if not doc.tokens:
        raise ValueError(f"document {doc.id!r} has no tokens")
    if not 0.0 <= diversity <= 1.0:
        raise ValueError(f"diversity must be in [0, 1], got {diversity}")
    if stopwords is None:
        stopwords = load_stopwords()
    candidates = _candidate_phrases(doc.tokens, ngram_max, stopwords)
    if not candidates:
        log.warning("document %r produced no keyword candidates", doc.id)
        return []
    doc_vec = embedder(doc.text)
    cand_vecs = [embedder(c) for c in candidates]
    relevance = np.array([cosine(v, doc_vec) for v in cand_vecs])

    lam = 1.0 - diversity
    chosen: list[int] = []
    remaining = list(range(len(candidates)))
    while remaining and len(chosen) < top_n:
        best = None
        best_key = None
        for idx in remaining:
            if chosen:
                redundancy = max(cosine(cand_vecs[idx], cand_vecs[j]) for j in chosen)
            else:
                redundancy = 0.0
            mmr = lam * relevance[idx] - (1.0 - lam) * redundancy
            # higher mmr wins; ties prefer the lexicographically smaller phrase
            key = (-mmr, candidates[idx])
            if best_key is None or key < best_key:
                best_key = key
                best = idx
        chosen.append(best)
        remaining.remove(best)
    return [Keyword(text=candidates[i], score=float(relevance[i])) for i in chosen]


_KEYWORD_LINE_RE = re.compile(r"^[a-z][a-z0-9' \-]*$")


def _parse_keyword_reply(reply: str) -> list[str]:
    """Keyword-per-line replies; bullets and numbering are stripped, lines
    that do not look like short lowercase phrases are discarded."""
    parsed = []
    for line in reply.splitlines():
        line = re.sub(r"^\s*(?:[-*•]|\d+[.)])\s*", "", line).strip().lower()
        if not line:
            continue
        if _KEYWORD_LINE_RE.fullmatch(line) and len(line.split()) <= 6:
            parsed.append(line)
    return parsed


def load_prompt(name: str) -> str:
    return resources.files("newsevents.data.prompts").joinpath(name).read_text("utf-8")


def refine_keywords(client: ProviderClient, keywords: Sequence[Keyword],
                    doc_excerpt: str) -> list[Keyword]:
    """Best-effort keyword refinement through the chat endpoint.

    The reply must be a newline-separated keyword list; anything unparseable,
    and any provider failure, leaves the input unchanged (with a logged
    warning). Parsed keywords inherit the score of a case-insensitive input
    match, otherwise 0.
    """
    if not keywords:
        raise ValueError("keywords must be non-empty")
    prompt = load_prompt("refine_keywords.txt").format(
        keywords="\n".join(k.text for k in keywords),
        excerpt=doc_excerpt,
    )
    try:
        reply = client.chat_complete(prompt, max_tokens=128, temperature=0.0)
    except ProviderError as exc:
        log.warning("keyword refinement failed (%s); keeping original keywords", exc)
        return list(keywords)
    parsed = _parse_keyword_reply(reply)
    if not parsed:
        log.warning("unparseable keyword refinement reply; keeping original keywords")
        return list(keywords)
    by_text = {k.text.lower(): k.score for k in keywords}
    return [Keyword(text=p, score=by_text.get(p, 0.0)) for p in parsed]
