"""k-medoids via the classic PAM BUILD + SWAP procedure."""
from __future__ import annotations

import numpy as np

from .result import ClusteringResult, as_values


def _distance_matrix(values: np.ndarray) -> np.ndarray:
    sq = np.sum(values ** 2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * values @ values.T, 0.0)
    return np.sqrt(d2)


def _build(D: np.ndarray, k: int) -> list[int]:
    n = D.shape[0]
    medoids = [int(np.argmin(D.sum(axis=0)))]
    nearest = D[:, medoids[0]].copy()
    for _ in range(1, k):
        # gain of adding candidate o: sum over points of max(nearest - d(i,o), 0)
        gains = np.maximum(nearest[:, None] - D, 0.0).sum(axis=0)
        gains[medoids] = -np.inf
        cand = int(np.argmax(gains))
        medoids.append(cand)
        np.minimum(nearest, D[:, cand], out=nearest)
    return medoids


def pam(X, k: int, seed: int = 0) -> ClusteringResult:
    """Partitioning around medoids: greedy BUILD initialization, then SWAP
    passes applying the best cost-reducing (medoid, non-medoid) exchange
    until none improves. Fully deterministic; ties pick the lowest index."""
    values = as_values(X)
    n = values.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    D = _distance_matrix(values)
    medoids = _build(D, k)

    def total_cost(meds: list[int]) -> float:
        return float(D[:, meds].min(axis=1).sum())

    cost = total_cost(medoids)
    while True:
        best_delta = 0.0
        best_swap = None
        med_dists = D[:, medoids]
        order = np.argsort(med_dists, axis=1, kind="stable")
        nearest = med_dists[np.arange(n), order[:, 0]]
        if k > 1:
            second = med_dists[np.arange(n), order[:, 1]]
        else:
            second = np.full(n, np.inf)
        nearest_idx = order[:, 0]
        non_medoids = [o for o in range(n) if o not in set(medoids)]
        for m_pos in range(k):
            # cost per point if medoid m_pos is dropped
            dropped = np.where(nearest_idx == m_pos, second, nearest)
            for o in non_medoids:
                new_cost = float(np.minimum(dropped, D[:, o]).sum())
                delta = new_cost - cost
                if delta < best_delta - 1e-12:
                    best_delta = delta
                    best_swap = (m_pos, o)
        if best_swap is None:
            break
        m_pos, o = best_swap
        medoids[m_pos] = o
        cost = total_cost(medoids)

    medoids = sorted(medoids)
    labels = np.argmin(D[:, medoids], axis=1).astype(np.int64)
    return ClusteringResult(
        algorithm="pam", labels=labels, k=k,
        representatives=values[medoids].copy(), seed=seed)
