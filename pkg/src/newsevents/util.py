"""Shared helpers: stable content hashing and seed derivation.

Every random decision in the pipeline flows from one user-facing seed.
Per-stage generators are derived as PCG64(SeedSequence([seed, stage_id, index]))
so stages stay decoupled: adding iterations to one stage never shifts the
random stream of another.
"""
from __future__ import annotations

import hashlib

import numpy as np

# Fixed stage identifiers for seed derivation. Order is frozen; append only.
STAGE_IDS = {
    "partition": 1,
    "embed": 2,
    "reduce": 3,
    "cluster": 4,
    "validate": 5,
    "postdetect": 6,
}


def content_hash64(*parts: str) -> int:
    """64-bit hash of the given strings: first 8 bytes (big-endian) of
    SHA-256 over the NUL-joined UTF-8 encoding. Platform independent."""
    h = hashlib.sha256("\x00".join(parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def new_rng(seed: int, stage: str | None = None, index: int = 0) -> np.random.Generator:
    """PCG64 generator for `seed`, optionally scoped to a pipeline stage."""
    if stage is None:
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence([seed, STAGE_IDS[stage], index])
    return np.random.Generator(np.random.PCG64(ss))
