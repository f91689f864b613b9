"""Stability-based cluster validation.

The cluster stability index compares, per cluster, the per-feature centroid
of its training members against the centroid of the validation points
assigned to it (nearest representative). The per-cluster distance is an
NRMSE: root mean square over features, normalized by the global value range
of that partition's training matrix. Averaging over clusters and then over
the K training partitions yields one score; lower means more stable
clusterings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cluster.result import ClusteringResult, as_values, assign_to_clusters
from .corpus import PartitionPlan
from .matrix import EmbeddingMatrix


@dataclass(frozen=True)
class PartitionInputs:
    training: np.ndarray
    clustering: ClusteringResult


@dataclass(frozen=True)
class CsaiInputs:
    partitions: tuple[PartitionInputs, ...]
    validation: np.ndarray


@dataclass(frozen=True)
class CsaiReport:
    """Everything the stability score is made of, kept for inspection:
    cluster counts N per partition, the training value ranges (T_min, T_max),
    per-cluster NRMSE values (None where a cluster received no validation
    points and was skipped), and the training/validation centroids."""

    K: int
    N_per_partition: tuple[int, ...]
    F: int
    T_range: tuple[tuple[float, float], ...]
    per_cluster_nrmse: tuple[tuple[float | None, ...], ...]
    per_partition_csai: tuple[float, ...]
    csai: float
    skipped_clusters: int
    training_centroids: tuple[np.ndarray, ...]
    validation_centroids: tuple[np.ndarray, ...]

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "N_per_partition": list(self.N_per_partition),
            "F": self.F,
            "T_range": [list(r) for r in self.T_range],
            "per_cluster_nrmse": [list(p) for p in self.per_cluster_nrmse],
            "per_partition_csai": list(self.per_partition_csai),
            "csai": self.csai,
            "skipped_clusters": self.skipped_clusters,
            "training_centroids": [c.tolist() for c in self.training_centroids],
            "validation_centroids": [c.tolist() for c in self.validation_centroids],
        }


def csai(inputs: CsaiInputs) -> CsaiReport:
    """Score clustering stability across the given training partitions.

    Per partition: validation rows are assigned to the nearest cluster
    representative; each cluster with at least one assigned row contributes
    NRMSE(training centroid, validation centroid) normalized by that
    partition's training value range; clusters with none are skipped and
    counted. The partition score is the mean over scored clusters, the
    overall score the mean over partitions.
    """
    if not inputs.partitions:
        raise ValueError("need at least one partition")
    validation = as_values(inputs.validation)
    F = validation.shape[1]
    if F < 1:
        raise ValueError("need at least one feature")

    ranges = []
    all_nrmse: list[tuple[float | None, ...]] = []
    partition_scores = []
    n_per = []
    skipped_total = 0
    t_centroids = []
    v_centroids = []

    for j, part in enumerate(inputs.partitions):
        training = as_values(part.training)
        if training.shape[1] != F:
            raise ValueError(
                f"partition {j}: training has {training.shape[1]} features, "
                f"validation has {F}")
        result = part.clustering
        if result.k < 1:
            raise ValueError(f"partition {j}: clustering has no clusters")
        t_min = float(training.min())
        t_max = float(training.max())
        if t_max == t_min:
            raise ValueError(
                f"partition {j}: degenerate scale, all training values equal "
                f"{t_min}")
        assigned = assign_to_clusters(result, validation)

        t_cent = np.vstack([
            training[result.labels == c].mean(axis=0) for c in range(result.k)
        ])
        v_cent = np.full((result.k, F), np.nan)
        nrmse: list[float | None] = []
        for c in range(result.k):
            rows = validation[assigned == c]
            if rows.shape[0] == 0:
                nrmse.append(None)
                skipped_total += 1
                continue
            v_cent[c] = rows.mean(axis=0)
            rms = np.sqrt(np.mean((v_cent[c] - t_cent[c]) ** 2))
            nrmse.append(float(rms / (t_max - t_min)))
        scored = [v for v in nrmse if v is not None]
        if not scored:
            raise ValueError(f"partition {j}: every cluster was skipped "
                             "(no validation points assigned)")
        ranges.append((t_min, t_max))
        all_nrmse.append(tuple(nrmse))
        partition_scores.append(float(np.mean(scored)))
        n_per.append(result.k)
        t_centroids.append(t_cent)
        v_centroids.append(v_cent)

    return CsaiReport(
        K=len(inputs.partitions),
        N_per_partition=tuple(n_per),
        F=F,
        T_range=tuple(ranges),
        per_cluster_nrmse=tuple(all_nrmse),
        per_partition_csai=tuple(partition_scores),
        csai=float(np.mean(partition_scores)),
        skipped_clusters=skipped_total,
        training_centroids=tuple(t_centroids),
        validation_centroids=tuple(v_centroids),
    )


@dataclass(frozen=True)
class StabilityProfile:
    """Per-partition stability scores for one algorithm on one embedding."""

    values: tuple[float, ...]
    mean: float
    stddev: float
    report: CsaiReport


def stability_profile(embeddings: EmbeddingMatrix,
                      fit: Callable[[np.ndarray], ClusteringResult],
                      plan: PartitionPlan) -> StabilityProfile:
    """Fit the algorithm independently on each training subset of the plan
    and score all partitions against the shared validation rows."""
    if plan.K < 2:
        raise ValueError(f"need K >= 2 partitions, got {plan.K}")
    row_of = {doc_id: i for i, doc_id in enumerate(embeddings.doc_ids)}
    missing = [i for ids in (plan.validation_ids, *plan.train_subsets)
               for i in ids if i not in row_of]
    if missing:
        raise ValueError(f"plan ids missing from embeddings: {missing[:5]}")
    validation = embeddings.values[[row_of[i] for i in plan.validation_ids]]
    partitions = []
    for subset in plan.train_subsets:
        training = embeddings.values[[row_of[i] for i in subset]]
        partitions.append(PartitionInputs(training=training, clustering=fit(training)))
    report = csai(CsaiInputs(partitions=tuple(partitions), validation=validation))
    values = report.per_partition_csai
    return StabilityProfile(values=values, mean=float(np.mean(values)),
                            stddev=float(np.std(values)), report=report)


def _pairwise_distances(values: np.ndarray) -> np.ndarray:
    sq = np.sum(values ** 2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * values @ values.T, 0.0)
    return np.sqrt(d2)


def silhouette(X, labels: Sequence[int]) -> float:
    """Mean silhouette (b - a) / max(a, b) over non-noise points; singleton
    clusters score 0 for their point."""
    values = as_values(X)
    labels = np.asarray(labels, dtype=np.int64)
    keep = labels >= 0
    values, labels = values[keep], labels[keep]
    ids = np.unique(labels)
    if len(ids) < 2:
        raise ValueError(f"silhouette needs >= 2 clusters, got {len(ids)}")
    D = _pairwise_distances(values)
    scores = np.zeros(len(values))
    for i in range(len(values)):
        own = labels == labels[i]
        n_own = own.sum()
        if n_own == 1:
            scores[i] = 0.0
            continue
        a = D[i][own].sum() / (n_own - 1)
        b = min(D[i][labels == c].mean() for c in ids if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def calinski_harabasz(X, labels: Sequence[int]) -> float:
    """Between/within variance ratio (BCSS/(k-1)) / (WCSS/(n-k)) over
    non-noise points; zero within-scatter returns +inf."""
    values = as_values(X)
    labels = np.asarray(labels, dtype=np.int64)
    keep = labels >= 0
    values, labels = values[keep], labels[keep]
    ids = np.unique(labels)
    k, n = len(ids), len(values)
    if k < 2:
        raise ValueError(f"calinski_harabasz needs >= 2 clusters, got {k}")
    if k >= n:
        raise ValueError(f"calinski_harabasz needs k < n, got k={k}, n={n}")
    overall = values.mean(axis=0)
    bcss = 0.0
    wcss = 0.0
    for c in ids:
        members = values[labels == c]
        mu = members.mean(axis=0)
        bcss += members.shape[0] * float(np.sum((mu - overall) ** 2))
        wcss += float(np.sum((members - mu) ** 2))
    if wcss == 0.0:
        return float("inf")
    return (bcss / (k - 1)) / (wcss / (n - k))
