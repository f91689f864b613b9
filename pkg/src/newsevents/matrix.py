"""Dense document-embedding matrices and their on-disk format.

File layout ("EMBMAT01"): 8 magic bytes, uint32-LE row count n, uint32-LE
feature count F, then n*F IEEE-754 float32 little-endian values in row-major
order. A JSON sidecar (same path + ".json") carries {backend, model_id,
doc_ids}.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"EMBMAT01"


@dataclass(frozen=True)
class EmbeddingMatrix:
    """n x F document-vector matrix tagged with its provenance.

    Row order matches corpus order. ``degenerate_rows`` marks documents that
    produced an all-zero vector (empty or fully out-of-vocabulary text); they
    are kept so row/corpus alignment survives the whole pipeline.
    """

    values: np.ndarray
    doc_ids: tuple[str, ...]
    backend: str
    model_id: str
    degenerate_rows: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"embedding matrix must be 2-D, got shape {v.shape}")
        if len(self.doc_ids) != v.shape[0]:
            raise ValueError(
                f"doc_ids count {len(self.doc_ids)} != row count {v.shape[0]}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("embedding matrix contains non-finite values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "doc_ids", tuple(self.doc_ids))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray, backend: str | None = None,
                    model_id: str | None = None) -> "EmbeddingMatrix":
        """Same documents, new feature space (e.g. after reduction)."""
        return EmbeddingMatrix(
            values=values,
            doc_ids=self.doc_ids,
            backend=backend if backend is not None else self.backend,
            model_id=model_id if model_id is not None else self.model_id,
            degenerate_rows=self.degenerate_rows,
        )


def save_matrix(matrix: EmbeddingMatrix, path: str | Path) -> None:
    path = Path(path)
    n, f = matrix.values.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, f))
        fh.write(np.ascontiguousarray(matrix.values, dtype="<f4").tobytes())
    sidecar = {
        "backend": matrix.backend,
        "model_id": matrix.model_id,
        "doc_ids": list(matrix.doc_ids),
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_matrix(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: bad magic bytes, not an EMBMAT01 file")
    n, f = struct.unpack("<II", raw[8:16])
    expected = 16 + 4 * n * f
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for {n}x{f}, got {len(raw)}")
    values = np.frombuffer(raw[16:], dtype="<f4").reshape(n, f).astype(np.float64)
    sidecar_path = Path(str(path) + ".json")
    if sidecar_path.exists():
        meta = json.loads(sidecar_path.read_text(encoding="utf-8"))
        doc_ids = tuple(meta["doc_ids"])
        backend = meta.get("backend", "unknown")
        model_id = meta.get("model_id", "")
    else:
        doc_ids = tuple(str(i) for i in range(n))
        backend, model_id = "unknown", ""
    zero = tuple(int(i) for i in np.flatnonzero(~values.any(axis=1)))
    return EmbeddingMatrix(values=values, doc_ids=doc_ids, backend=backend,
                           model_id=model_id, degenerate_rows=zero)
