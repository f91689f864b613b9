"""Shared clustering result container and nearest-representative assignment."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..matrix import EmbeddingMatrix


def as_values(X: "EmbeddingMatrix | np.ndarray | Sequence") -> np.ndarray:
    """Accept an EmbeddingMatrix or a plain array-like; return an (n, F) array."""
    if isinstance(X, EmbeddingMatrix):
        return X.values
    values = np.asarray(X, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    return values


@dataclass(frozen=True)
class WssCurve:
    """Within-cluster sum of squared errors per candidate k, plus the k chosen
    by maximal perpendicular distance to the chord of the curve."""

    ks: tuple[int, ...]
    wss: tuple[float, ...]
    chosen_k: int


@dataclass(frozen=True)
class MergeTable:
    """Agglomerative merge history. Row ids 0..n-1 are original points; the
    merge at step s creates id n+s. Rows: (left_id, right_id, distance,
    new_size) with left_id < right_id."""

    rows: tuple[tuple[int, int, float, int], ...]
    n_points: int


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    loglik_trace: tuple[float, ...]


@dataclass(frozen=True)
class CondensedTree:
    """HDBSCAN hierarchy condensed by minimum cluster size.

    rows: (parent, child, lambda, child_size); children with size 1 are
    points, larger children are condensed clusters. stability maps condensed
    cluster id -> excess-of-mass stability.
    """

    rows: tuple[tuple[int, int, float, int], ...]
    stability: dict[int, float]
    selected: tuple[int, ...]


@dataclass(frozen=True)
class KmeansDiagnostics:
    """Per-run k-means internals kept for invariant checks."""

    wss: float
    wss_trace: tuple[float, ...]
    n_iter: int


@dataclass(frozen=True)
class ClusteringResult:
    """Labels plus per-cluster representatives for one fitted clustering.

    Labels are -1 (noise) or 0..k-1; every id in 0..k-1 has at least one
    member and representatives row r belongs to cluster r.
    """

    algorithm: str
    labels: np.ndarray
    k: int
    representatives: np.ndarray
    extras: Any = None
    seed: int = 0

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        reps = np.asarray(self.representatives, dtype=np.float64)
        object.__setattr__(self, "representatives", reps)
        present = set(np.unique(labels).tolist())
        if not present <= set(range(-1, self.k)):
            raise ValueError(f"labels outside -1..{self.k - 1}: {sorted(present)}")
        for c in range(self.k):
            if c not in present:
                raise ValueError(f"cluster {c} has no members")
        if reps.shape[0] != self.k:
            raise ValueError(
                f"representatives rows {reps.shape[0]} != k {self.k}")

    @property
    def n_noise(self) -> int:
        return int(np.sum(self.labels == -1))

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


def assign_to_clusters(result: ClusteringResult, Y: "EmbeddingMatrix | np.ndarray") -> np.ndarray:
    """Label each row of Y with its nearest representative (Euclidean).

    Noise is never assigned: every row gets a real cluster id; exact distance
    ties go to the lowest cluster id.
    """
    values = as_values(Y)
    reps = result.representatives
    if values.shape[1] != reps.shape[1]:
        raise ValueError(
            f"dimension mismatch: points have {values.shape[1]} features, "
            f"representatives have {reps.shape[1]}")
    # direct differences keep exact ties exact, so the lowest-id rule holds
    d2 = np.sum((values[:, None, :] - reps[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1).astype(np.int64)
