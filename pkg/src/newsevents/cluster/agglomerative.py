"""Agglomerative clustering via Lance-Williams updates on a full distance
matrix, with single, complete, average, and Ward linkage.

Ward bookkeeping: the matrix is initialized to squared Euclidean distances
halved, so every reported merge distance equals the Ward criterion increase
|A||B|/(|A|+|B|) * ||centroid_A - centroid_B||^2. The other linkages report
plain Euclidean cluster distances.
"""
from __future__ import annotations

import numpy as np

from .result import ClusteringResult, MergeTable, as_values

LINKAGES = ("single", "complete", "average", "ward")


def _initial_distances(values: np.ndarray, linkage: str) -> np.ndarray:
    sq = np.sum(values ** 2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * values @ values.T, 0.0)
    return d2 / 2.0 if linkage == "ward" else np.sqrt(d2)


def linkage_matrix(values: np.ndarray, linkage: str) -> MergeTable:
    """Full merge history (n-1 rows). The closest active pair merges first;
    distance ties prefer the pair with the smallest (left_id, right_id)."""
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    n = values.shape[0]
    if n < 2:
        raise ValueError("agglomerative clustering needs n >= 2")
    total = 2 * n - 1
    # growing distance matrix over all cluster ids ever created
    D = np.full((total, total), np.inf)
    D[:n, :n] = _initial_distances(values, linkage)
    np.fill_diagonal(D, np.inf)
    sizes = np.zeros(total, dtype=np.int64)
    sizes[:n] = 1
    active = np.zeros(total, dtype=bool)
    active[:n] = True

    rows = []
    for step in range(n - 1):
        ids = np.flatnonzero(active)
        sub = D[np.ix_(ids, ids)]
        flat = int(np.argmin(sub))  # row-major argmin = lowest (i, j) on ties
        i, j = divmod(flat, len(ids))
        a, b = int(ids[i]), int(ids[j])
        left, right = (a, b) if a < b else (b, a)
        dist = float(D[a, b])
        new = n + step
        new_size = int(sizes[a] + sizes[b])

        others = ids[(ids != a) & (ids != b)]
        if len(others):
            dac = D[a, others]
            dbc = D[b, others]
            if linkage == "single":
                dnew = np.minimum(dac, dbc)
            elif linkage == "complete":
                dnew = np.maximum(dac, dbc)
            elif linkage == "average":
                dnew = (sizes[a] * dac + sizes[b] * dbc) / (sizes[a] + sizes[b])
            else:  # ward
                sc = sizes[others]
                t = sizes[a] + sizes[b] + sc
                dnew = ((sizes[a] + sc) * dac + (sizes[b] + sc) * dbc
                        - sc * dist) / t
            D[new, others] = dnew
            D[others, new] = dnew
        sizes[new] = new_size
        active[a] = active[b] = False
        active[new] = True
        rows.append((left, right, dist, new_size))
    return MergeTable(rows=tuple(rows), n_points=n)


def _labels_from_merges(table: MergeTable, n_merges: int) -> np.ndarray:
    """Flat labels after applying the first n_merges rows; clusters are
    numbered 0..k-1 by their smallest member index."""
    n = table.n_points
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step in range(n_merges):
        left, right, _, _ = table.rows[step]
        new = n + step
        parent[find(left)] = new
        parent[find(right)] = new
    roots: dict[int, list[int]] = {}
    for p in range(n):
        roots.setdefault(find(p), []).append(p)
    groups = sorted(roots.values(), key=lambda g: g[0])
    labels = np.empty(n, dtype=np.int64)
    for c, group in enumerate(groups):
        labels[group] = c
    return labels


def agglomerative(X, linkage: str = "average", n_clusters: int | None = None,
                  distance_threshold: float | None = None,
                  seed: int = 0) -> ClusteringResult:
    """Hierarchical clustering cut either at a cluster count or at a distance
    threshold (merges with distance < threshold are applied). Exactly one cut
    mode must be given. Representatives are cluster centroids."""
    if (n_clusters is None) == (distance_threshold is None):
        raise ValueError("give exactly one of n_clusters or distance_threshold")
    values = as_values(X)
    n = values.shape[0]
    table = linkage_matrix(values, linkage)
    if n_clusters is not None:
        if not 1 <= n_clusters <= n:
            raise ValueError(f"n_clusters must be in [1, {n}], got {n_clusters}")
        n_merges = n - n_clusters
    else:
        n_merges = sum(1 for row in table.rows if row[2] < distance_threshold)
    labels = _labels_from_merges(table, n_merges)
    k = int(labels.max()) + 1
    reps = np.vstack([values[labels == c].mean(axis=0) for c in range(k)])
    return ClusteringResult(algorithm="agglomerative", labels=labels, k=k,
                            representatives=reps, extras=table, seed=seed)
