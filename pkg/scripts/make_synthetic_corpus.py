#!/usr/bin/env python3
"""Regenerate the bundled synthetic desk-scale corpora and word vectors.

Six news topics with mostly disjoint vocabularies give clusterable corpora
without any network dependency. The word-vector table places each topic's
words (and the matching taxonomy label words) around one of six separated
centers, so both clustering and deterministic topic assignment behave
sensibly offline. Deterministic for a fixed seed.

Usage: python scripts/make_synthetic_corpus.py [--out src/newsevents/data]
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

SEED = 1234
DIM = 16

TOPICS = {
    "business": dict(
        iptc="economy, business and finance",
        words=[
            "shares", "market", "stocks", "investors", "earnings", "profit",
            "revenue", "bank", "trading", "inflation", "rates", "dividend",
            "merger", "acquisition", "forecast", "quarterly", "growth",
            "analysts", "shareholders", "bonds", "currency", "exports",
            "manufacturing", "retail",
        ],
        label_words=["economy", "business", "finance"],
    ),
    "environment": dict(
        iptc="environment",
        words=[
            "river", "water", "climate", "emissions", "wildlife", "forest",
            "conservation", "drought", "pollution", "renewable", "species",
            "habitat", "freshwater", "irrigation", "ecosystem", "glacier",
            "warming", "biodiversity", "coastal", "wetlands", "carbon",
            "sustainability", "reservoir", "rainfall",
        ],
        label_words=["environment"],
    ),
    "sports": dict(
        iptc="sport",
        words=[
            "league", "season", "coach", "playoff", "tournament",
            "championship", "goals", "scored", "team", "players", "match",
            "stadium", "victory", "defeat", "injury", "transfer", "finals",
            "hockey", "soccer", "basketball", "athlete", "training", "fans",
            "record",
        ],
        label_words=["sport", "sports"],
    ),
    "technology": dict(
        iptc="science and technology",
        words=[
            "software", "microsoft", "xbox", "gaming", "chip", "processor",
            "startup", "artificial", "intelligence", "robotics", "quantum",
            "computing", "university", "research", "laboratory", "innovation",
            "patent", "semiconductor", "cloud", "cybersecurity", "algorithm",
            "hardware", "platform", "digital",
        ],
        label_words=["science", "technology"],
    ),
    "politics": dict(
        iptc="politics",
        words=[
            "election", "parliament", "senate", "candidate", "campaign",
            "votes", "coalition", "minister", "legislation", "policy",
            "referendum", "debate", "government", "opposition", "ballot",
            "congress", "diplomatic", "treaty", "sanctions", "summit",
            "cabinet", "reform", "lawmakers", "constituency",
        ],
        label_words=["politics"],
    ),
    "health": dict(
        iptc="health",
        words=[
            "hospital", "patients", "vaccine", "doctors", "treatment",
            "clinical", "disease", "outbreak", "infection", "medical",
            "therapy", "symptoms", "diagnosis", "healthcare", "nurses",
            "surgery", "medicine", "epidemic", "virus", "immunity",
            "pharmaceutical", "wellness", "screening", "prevention",
        ],
        label_words=["health"],
    ),
}

GENERAL = [
    "reported", "officials", "announced", "according", "statement", "sources",
    "week", "public", "national", "international", "major", "report", "press",
    "media", "agency", "country", "region", "city", "today", "people",
]


def make_doc_text(rng: np.random.Generator, words: list[str]) -> str:
    n_tokens = int(rng.integers(40, 81))
    tokens = []
    for _ in range(n_tokens):
        pool = words if rng.random() < 0.85 else GENERAL
        tokens.append(pool[int(rng.integers(len(pool)))])
    # light punctuation so preprocessing has something to normalize
    out = []
    for i, tok in enumerate(tokens):
        if i == 0 or (i > 0 and out[-1].endswith(".")):
            tok = tok.capitalize()
        out.append(tok + ("." if rng.random() < 0.12 else ""))
    return " ".join(out)


def write_corpus(path: Path, n_docs: int, rng: np.random.Generator) -> None:
    names = list(TOPICS)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n_docs):
            topic = names[i % len(names)]
            text = make_doc_text(rng, TOPICS[topic]["words"])
            day = int(rng.integers(1, 29))
            doc = {
                "id": f"doc{i:04d}",
                "text": text,
                "url": f"https://news.example/{topic}/{i}",
                "date": f"2024-03-{day:02d}T{int(rng.integers(0, 24)):02d}:00:00",
                "source": "synthetic-desk",
            }
            fh.write(json.dumps(doc, ensure_ascii=False, sort_keys=True) + "\n")


def write_word_vectors(path: Path, rng: np.random.Generator) -> None:
    centers = {}
    for t, name in enumerate(TOPICS):
        center = np.zeros(DIM)
        center[(2 * t) % DIM] = 3.0
        center[(2 * t + 1) % DIM] = 1.5
        centers[name] = center
    lines = []
    for name, spec in TOPICS.items():
        for word in spec["words"] + spec["label_words"]:
            vec = centers[name] + rng.normal(0.0, 0.15, DIM)
            lines.append(word + " " + " ".join(f"{v:.6f}" for v in vec))
    for word in GENERAL:
        vec = rng.normal(0.0, 0.3, DIM)
        lines.append(word + " " + " ".join(f"{v:.6f}" for v in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="src/newsevents/data", type=Path)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(SEED))
    write_corpus(args.out / "corpus_200.jsonl", 200, rng)
    write_corpus(args.out / "corpus_300.jsonl", 300, rng)
    write_word_vectors(args.out / "wordvec_synthetic.txt", rng)
    print(f"wrote corpus_200.jsonl, corpus_300.jsonl, wordvec_synthetic.txt "
          f"to {args.out}")


if __name__ == "__main__":
    main()
