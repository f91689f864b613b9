"""Independent reference implementations used to verify the main code paths.

Everything here is written from the definitions, favoring plain loops over
shared library code, so a bug in the package cannot hide in its own oracle.
"""
from __future__ import annotations

import math

import numpy as np


# -- stability index: direct transliteration --------------------------------

def csai_reference(partitions, validation) -> float:
    """partitions: list of (training_matrix, labels, representatives).

    Plain-Python evaluation: assign each validation row to the nearest
    representative, average each feature over cluster members on both sides,
    take the range-normalized RMS difference per cluster, average over
    clusters with assigned validation rows, then over partitions.
    """
    validation = [list(map(float, row)) for row in np.asarray(validation)]
    per_partition = []
    for training, labels, reps in partitions:
        training = [list(map(float, row)) for row in np.asarray(training)]
        labels = [int(x) for x in np.asarray(labels)]
        reps = [list(map(float, row)) for row in np.asarray(reps)]
        n_clusters = len(reps)
        n_features = len(training[0])
        flat = [v for row in training for v in row]
        t_min, t_max = min(flat), max(flat)

        assigned: list[list[list[float]]] = [[] for _ in range(n_clusters)]
        for row in validation:
            best, best_d = 0, float("inf")
            for c, rep in enumerate(reps):
                d = math.sqrt(sum((row[i] - rep[i]) ** 2
                                  for i in range(n_features)))
                if d < best_d:
                    best, best_d = c, d
            assigned[best].append(row)

        scores = []
        for c in range(n_clusters):
            members = [training[i] for i in range(len(training))
                       if labels[i] == c]
            if not assigned[c]:
                continue
            sq = 0.0
            for i in range(n_features):
                t_i = sum(m[i] for m in members) / len(members)
                v_i = sum(v[i] for v in assigned[c]) / len(assigned[c])
                sq += (v_i - t_i) ** 2
            scores.append(math.sqrt(sq / n_features) / (t_max - t_min))
        per_partition.append(sum(scores) / len(scores))
    return sum(per_partition) / len(per_partition)


# -- agglomerative: recompute every cluster distance from scratch -----------

def naive_linkage(points: np.ndarray, linkage: str) -> list[tuple[int, int, float, int]]:
    """O(n^3) merge history computing pairwise cluster distances from their
    definitions at every step. Tie rule matches the main implementation:
    smallest distance, then smallest (left_id, right_id)."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    clusters: dict[int, list[int]] = {i: [i] for i in range(n)}

    def dist(a: list[int], b: list[int]) -> float:
        pairs = [float(np.linalg.norm(points[i] - points[j]))
                 for i in a for j in b]
        if linkage == "single":
            return min(pairs)
        if linkage == "complete":
            return max(pairs)
        if linkage == "average":
            return sum(pairs) / len(pairs)
        ca = points[a].mean(axis=0)
        cb = points[b].mean(axis=0)
        return (len(a) * len(b) / (len(a) + len(b))) * float(
            np.sum((ca - cb) ** 2))

    rows = []
    for step in range(n - 1):
        ids = sorted(clusters)
        best = None
        for x in range(len(ids)):
            for y in range(x + 1, len(ids)):
                a, b = ids[x], ids[y]
                d = dist(clusters[a], clusters[b])
                if best is None or d < best[0] - 0.0 and True:
                    pass
                key = (d, a, b)
                if best is None or key < best:
                    best = key
        d, a, b = best
        new = n + step
        clusters[new] = clusters.pop(a) + clusters.pop(b)
        rows.append((a, b, d, len(clusters[new])))
    return rows


# -- neighborhood preservation ----------------------------------------------

def trustworthiness(X: np.ndarray, Y: np.ndarray, k: int) -> float:
    """1 - penalty for points that enter the embedding's k-NN without being
    in the original k-NN, weighted by their original-space rank excess."""
    X, Y = np.asarray(X), np.asarray(Y)
    n = X.shape[0]

    def knn_and_ranks(data):
        d = np.linalg.norm(data[:, None, :] - data[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        order = np.argsort(d, axis=1, kind="stable")
        ranks = np.empty_like(order)
        for i in range(n):
            ranks[i, order[i]] = np.arange(1, n + 1)
        return order[:, :k], ranks

    x_knn, x_ranks = knn_and_ranks(X)
    y_knn, _ = knn_and_ranks(Y)
    penalty = 0
    for i in range(n):
        x_set = set(x_knn[i].tolist())
        for j in y_knn[i]:
            if int(j) not in x_set:
                penalty += x_ranks[i, j] - k
    return 1.0 - (2.0 / (n * k * (2 * n - 3 * k - 1))) * penalty


# -- partition agreement ------------------------------------------------------

def adjusted_rand_index(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    ua, ub = np.unique(a), np.unique(b)
    table = np.zeros((len(ua), len(ub)), dtype=np.int64)
    for i, ca in enumerate(ua):
        for j, cb in enumerate(ub):
            table[i, j] = np.sum((a == ca) & (b == cb))

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    total = comb2(len(a))
    expected = sum_a * sum_b / total
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


# -- layout curve: grid search + pattern refinement ---------------------------

def fit_curve_oracle(min_dist: float, spread: float = 1.0,
                     grid_points: int = 300) -> tuple[float, float]:
    """Least-squares (a, b) for 1/(1 + a x^(2b)) on the same target grid,
    found by log-space grid search refined with a shrinking pattern search
    (no shared optimizer code)."""
    xv = np.linspace(0.0, 3.0 * spread, grid_points)
    yv = np.where(xv <= min_dist, 1.0, np.exp(-(xv - min_dist) / spread))

    def loss(a, b):
        with np.errstate(over="ignore"):
            pred = 1.0 / (1.0 + a * xv ** (2.0 * b))
        return float(np.sum((pred - yv) ** 2))

    best = None
    for la in np.linspace(np.log(0.05), np.log(20.0), 60):
        for lb in np.linspace(np.log(0.1), np.log(4.0), 60):
            a, b = math.exp(la), math.exp(lb)
            key = (loss(a, b), a, b)
            if best is None or key < best:
                best = key
    _, a, b = best
    step = 0.2
    while step > 1e-7:
        improved = False
        for da, db in ((step, 0), (-step, 0), (0, step), (0, -step),
                       (step, step), (-step, -step), (step, -step),
                       (-step, step)):
            na, nb = a * math.exp(da), b * math.exp(db)
            if loss(na, nb) < loss(a, b):
                a, b = na, nb
                improved = True
        if not improved:
            step /= 2.0
    return a, b


# -- synthetic data -----------------------------------------------------------

def gaussian_blobs(centers: np.ndarray, sigma: float, per_center: int,
                   seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = np.asarray(centers, dtype=np.float64)
    points = np.vstack([
        c + rng.normal(0.0, sigma, size=(per_center, centers.shape[1]))
        for c in centers
    ])
    labels = np.repeat(np.arange(len(centers)), per_center)
    return points, labels


def simplex_blobs(n_blobs: int, edge: float, sigma: float, per_center: int,
                  seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Blob centers at scaled standard-basis vectors: a regular simplex, so
    every pair of centers is exactly `edge` apart and optimal WSS falls
    linearly in k up to the true blob count."""
    centers = np.eye(n_blobs) * (edge / np.sqrt(2.0))
    return gaussian_blobs(centers, sigma, per_center, seed)


def two_moons(n: int, noise: float, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    half = n // 2
    t = np.linspace(0.0, np.pi, half)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    pts = np.vstack([upper, lower])
    return pts + rng.normal(0.0, noise, size=pts.shape)
