"""k-means with k-means++ seeding, best-of-restarts, and elbow selection."""
from __future__ import annotations

import logging

import numpy as np

from ..util import new_rng
from .result import ClusteringResult, KmeansDiagnostics, WssCurve, as_values

log = logging.getLogger(__name__)


def _sq_dists(values: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(values ** 2, axis=1)[:, None]
        - 2.0 * values @ centers.T
        + np.sum(centers ** 2, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _kmeanspp(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = values.shape[0]
    centers = np.empty((k, values.shape[1]))
    centers[0] = values[rng.integers(n)]
    d2 = np.sum((values - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = rng.choice(n, p=d2 / total)
        else:
            # all remaining mass zero (duplicate points): pick any unused row
            idx = int(rng.integers(n))
        centers[c] = values[idx]
        np.minimum(d2, np.sum((values - centers[c]) ** 2, axis=1), out=d2)
    return centers


def _lloyd(values: np.ndarray, centers: np.ndarray, max_iter: int,
           tol: float) -> tuple[np.ndarray, np.ndarray, list[float], int]:
    n, k = values.shape[0], centers.shape[0]
    trace: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    for it in range(max_iter):
        d2 = _sq_dists(values, centers)
        labels = np.argmin(d2, axis=1)
        # repair empty clusters by claiming the point farthest from its centroid
        counts = np.bincount(labels, minlength=k)
        while np.any(counts == 0):
            empty = int(np.argmin(counts))
            assigned = d2[np.arange(n), labels]
            far = int(np.argmax(assigned))
            centers[empty] = values[far]
            labels[far] = empty
            d2[:, empty] = np.sum((values - centers[empty]) ** 2, axis=1)
            counts = np.bincount(labels, minlength=k)
        new_centers = np.empty_like(centers)
        for c in range(k):
            new_centers[c] = values[labels == c].mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        trace.append(float(np.sum((values - centers[labels]) ** 2)))
        if shift < tol:
            break
    return labels, centers, trace, len(trace)


def kmeans(X, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6,
           restarts: int = 10) -> ClusteringResult:
    """Best of `restarts` k-means++/Lloyd runs, scored by final WSS."""
    values = as_values(X)
    n = values.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = new_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        centers = _kmeanspp(values, k, rng)
        labels, centers, trace, n_iter = _lloyd(values, centers, max_iter, tol)
        wss = trace[-1]
        if best is None or wss < best[0]:
            best = (wss, labels, centers, trace, n_iter)
    wss, labels, centers, trace, n_iter = best
    return ClusteringResult(
        algorithm="kmeans", labels=labels, k=k, representatives=centers,
        extras=KmeansDiagnostics(wss=wss, wss_trace=tuple(trace), n_iter=n_iter),
        seed=seed)


def chord_elbow(ks, wss) -> int:
    """k whose (k, wss) point lies farthest (perpendicular) from the chord
    joining the curve's endpoints; ties and flat curves fall back to the
    smallest k (with a warning for the flat case)."""
    ks = list(ks)
    wss = [float(w) for w in wss]
    p1 = np.array([ks[0], wss[0]])
    p2 = np.array([ks[-1], wss[-1]])
    chord = p2 - p1
    norm = float(np.linalg.norm(chord))
    dists = np.array([
        abs(chord[0] * (w - p1[1]) - chord[1] * (k - p1[0])) / norm
        for k, w in zip(ks, wss)
    ])
    scale = max(1.0, float(np.max(np.abs(wss))))
    if float(dists.max()) <= 1e-9 * scale:
        log.warning("flat WSS curve: no elbow, falling back to k=%d", ks[0])
        return ks[0]
    return ks[int(np.argmax(dists))]


def elbow_select_k(X, k_min: int, k_max: int, seed: int = 0,
                   restarts: int = 10) -> WssCurve:
    """WSS curve over k_min..k_max with the chord-distance elbow as chosen_k."""
    values = as_values(X)
    n = values.shape[0]
    if k_min < 1:
        raise ValueError(f"k_min must be >= 1, got {k_min}")
    if k_max > n:
        raise ValueError(f"k_max must be <= n={n}, got {k_max}")
    if k_min >= k_max:
        raise ValueError(f"need k_min < k_max, got {k_min} >= {k_max}")
    ks = list(range(k_min, k_max + 1))
    wss = [kmeans(values, k, seed=seed, restarts=restarts).extras.wss for k in ks]
    return WssCurve(ks=tuple(ks), wss=tuple(wss), chosen_k=chord_elbow(ks, wss))
