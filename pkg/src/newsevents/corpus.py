"""Corpus ingestion: GKG TSV exports, JSONL corpora, text normalization,
and deterministic train/validation partition plans.

Canonical corpus format is JSONL with full article text (one object per
line, keys: id, text, optional url/date/source). The GKG adapter reads the
tab-delimited GKG 2.1 export layout and can join article bodies from a
companion url->text JSONL lookup.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, Sequence

from .util import new_rng

# Default column indices for GKG 2.1 exports (GDELT codebook order):
# 0 GKGRECORDID, 1 DATE, 3 SourceCommonName, 4 DocumentIdentifier (URL),
# 7 Themes, 22 Quotations, 23 AllNames. "text" columns are concatenated
# when no url->text lookup is supplied.
DEFAULT_GKG_COLUMNS: dict[str, int | list[int]] = {
    "id": 0,
    "date": 1,
    "source": 3,
    "url": 4,
    "text": [7, 22, 23],
}

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_DIGIT_RE = re.compile(r"\d+")
_NON_ALNUM_RE = re.compile(r"[^0-9a-zA-Z]+")


@dataclass(frozen=True)
class Document:
    """One identified news text prior to normalization."""

    id: str
    raw_text: str
    url: str | None = None
    published_at: datetime | None = None
    source: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.raw_text:
            raise ValueError(f"document {self.id!r}: raw_text must be non-empty")


@dataclass(frozen=True)
class CleanDocument:
    """Normalized token stream for one document.

    ``text`` is always the space-join of ``tokens``. ``degenerate`` is set
    when normalization stripped every token; such documents are kept so that
    corpus/matrix row alignment is preserved downstream.
    """

    id: str
    text: str
    tokens: tuple[str, ...]
    degenerate: bool = False


@dataclass(frozen=True)
class Corpus:
    documents: tuple[CleanDocument, ...]
    provenance: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "documents", tuple(self.documents))
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            raise ValueError("corpus contains duplicate document ids")

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.documents)

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(d.text for d in self.documents)


@dataclass(frozen=True)
class PartitionPlan:
    """Disjoint training subsets plus a shared validation split.

    validation_ids and every train subset are pairwise disjoint and together
    cover the corpus; train subset sizes differ by at most one.
    """

    seed: int
    validation_ids: tuple[str, ...]
    train_subsets: tuple[tuple[str, ...], ...]
    K: int


@dataclass(frozen=True)
class PreprocessOptions:
    lowercase: bool = True
    strip_urls: bool = True
    strip_digits: bool = True
    strip_symbols: bool = True
    stopword_list: frozenset[str] = field(default_factory=frozenset)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Bundled English stopword list, or one word per line from `path`."""
    if path is None:
        text = resources.files("newsevents.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def default_options() -> PreprocessOptions:
    return PreprocessOptions(stopword_list=load_stopwords())


def _parse_gkg_date(raw: str) -> datetime | None:
    raw = raw.strip()
    if not raw:
        return None
    try:
        return datetime.strptime(raw, "%Y%m%d%H%M%S")
    except ValueError:
        return None


def _parse_iso_date(raw: str) -> datetime | None:
    if not raw:
        return None
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        return None


def load_url_text_lookup(stream: BinaryIO | Iterable[bytes]) -> dict[str, str]:
    """JSONL of {url, text} used to join article bodies onto GKG rows."""
    lookup: dict[str, str] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8").strip()
        if not line:
            continue
        obj = json.loads(line)
        if "url" not in obj or "text" not in obj:
            raise ValueError(f"line {lineno}: lookup entries need url and text")
        lookup[obj["url"]] = obj["text"]
    return lookup


def parse_gkg(
    tsv_stream: BinaryIO | Iterable[bytes],
    column_map: Mapping[str, int | list[int]] | None = None,
    strict: bool = False,
    url_text_lookup: Mapping[str, str] | None = None,
) -> tuple[list[Document], int]:
    """Parse a tab-delimited GKG export into Documents.

    Returns (documents, skipped_row_count). A row is malformed when it lacks
    a mapped column, has an empty id, duplicates an earlier id, or yields no
    text. strict=True aborts on the first malformed row, naming it;
    strict=False skips and counts.
    """
    cmap = dict(DEFAULT_GKG_COLUMNS if column_map is None else column_map)
    if "id" not in cmap or "url" not in cmap:
        raise ValueError("column_map must map at least 'id' and 'url'")
    text_cols = cmap.get("text", [])
    if isinstance(text_cols, int):
        text_cols = [text_cols]

    docs: list[Document] = []
    seen: set[str] = set()
    skipped = 0
    for rowno, raw in enumerate(tsv_stream, start=1):
        line = raw.decode("utf-8").rstrip("\r\n")
        if not line:
            continue
        fields = line.split("\t")

        def fail(reason: str) -> None:
            raise ValueError(f"gkg row {rowno}: {reason}")

        try:
            needed = [v for k, v in cmap.items() if k != "text" and isinstance(v, int)]
            needed += list(text_cols)
            if max(needed) >= len(fields):
                fail(f"expected at least {max(needed) + 1} fields, got {len(fields)}")
            doc_id = fields[cmap["id"]].strip()
            if not doc_id:
                fail("empty id")
            if doc_id in seen:
                fail(f"duplicate id {doc_id!r}")
            url = fields[cmap["url"]].strip() or None
            date = _parse_gkg_date(fields[cmap["date"]]) if "date" in cmap else None
            source = fields[cmap["source"]].strip() or None if "source" in cmap else None
            text = ""
            if url_text_lookup is not None and url is not None:
                text = url_text_lookup.get(url, "")
            if not text:
                text = " ".join(fields[c].strip() for c in text_cols if fields[c].strip())
            if not text:
                fail("no text available (empty text columns, no lookup match)")
        except ValueError:
            if strict:
                raise
            skipped += 1
            continue
        seen.add(doc_id)
        docs.append(Document(id=doc_id, raw_text=text, url=url,
                             published_at=date, source=source))
    return docs, skipped


def load_corpus(jsonl_stream: BinaryIO | Iterable[bytes]) -> list[Document]:
    """Read the canonical JSONL corpus format (id and text required)."""
    docs: list[Document] = []
    first_line: dict[str, int] = {}
    for lineno, raw in enumerate(jsonl_stream, start=1):
        line = raw.decode("utf-8").strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        for key in ("id", "text"):
            if key not in obj:
                raise ValueError(f"line {lineno}: missing field {key}")
        doc_id = str(obj["id"])
        if doc_id in first_line:
            raise ValueError(
                f"duplicate id {doc_id!r} on lines {first_line[doc_id]} and {lineno}"
            )
        first_line[doc_id] = lineno
        docs.append(Document(
            id=doc_id,
            raw_text=obj["text"],
            url=obj.get("url"),
            published_at=_parse_iso_date(obj.get("date", "")),
            source=obj.get("source"),
        ))
    return docs


def preprocess(doc: Document, opts: PreprocessOptions) -> CleanDocument:
    """Normalize one document with the fixed pipeline order:
    strip URLs -> lowercase -> strip digits -> non-alphanumerics to spaces ->
    whitespace tokenize -> drop stopwords -> drop tokens shorter than 2 chars.
    """
    text = doc.raw_text
    if opts.strip_urls:
        text = _URL_RE.sub(" ", text)
    if opts.lowercase:
        text = text.lower()
    if opts.strip_digits:
        text = _DIGIT_RE.sub(" ", text)
    if opts.strip_symbols:
        text = _NON_ALNUM_RE.sub(" ", text)
    tokens = text.split()
    if opts.stopword_list:
        tokens = [t for t in tokens if t not in opts.stopword_list]
    tokens = [t for t in tokens if len(t) >= 2]
    return CleanDocument(
        id=doc.id,
        text=" ".join(tokens),
        tokens=tuple(tokens),
        degenerate=not tokens,
    )


def preprocess_corpus(docs: Sequence[Document], opts: PreprocessOptions,
                      provenance: str = "") -> Corpus:
    return Corpus(
        documents=tuple(preprocess(d, opts) for d in docs),
        provenance=provenance,
    )


def split_partitions(corpus: Corpus, K: int, val_fraction: float, seed: int) -> PartitionPlan:
    """Shuffle ids with PCG64(seed) and split into one validation set plus K
    equal-as-possible disjoint training subsets (round-robin assignment)."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not 0.0 < val_fraction < 1.0:
        raise ValueError(f"val_fraction must be in (0, 1), got {val_fraction}")
    ids = list(corpus.ids)
    n = len(ids)
    rng = new_rng(seed, "partition")
    order = rng.permutation(n)
    shuffled = [ids[i] for i in order]
    n_val = max(1, int(n * val_fraction + 0.5))
    validation = shuffled[:n_val]
    training = shuffled[n_val:]
    if K > len(training):
        raise ValueError(
            f"K={K} exceeds training size {len(training)} "
            f"(n={n}, validation={n_val})"
        )
    subsets = tuple(tuple(training[i::K]) for i in range(K))
    return PartitionPlan(seed=seed, validation_ids=tuple(validation),
                         train_subsets=subsets, K=K)


def save_clean_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(json.dumps(
                {"id": doc.id, "text": doc.text, "tokens": list(doc.tokens),
                 "degenerate": doc.degenerate},
                ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def load_clean_corpus(path: str | Path) -> Corpus:
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            docs.append(CleanDocument(
                id=obj["id"], text=obj["text"], tokens=tuple(obj["tokens"]),
                degenerate=obj.get("degenerate", False)))
    return Corpus(documents=tuple(docs), provenance=str(path))
