"""Dimensionality reduction: PCA (exact baseline) and a deterministic UMAP.

The UMAP here trades speed for reproducibility: exact k-NN instead of
NN-descent, a single-threaded layout loop with an inline xorshift64* RNG,
and a fixed edge-processing order, so repeated runs with one seed are
bit-identical. Intended for desk-scale inputs (n up to ~20k).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from scipy.optimize import curve_fit

from .matrix import EmbeddingMatrix

SMOOTH_K_TOL = 1e-5
SMOOTH_K_MAX_ITER = 64


@dataclass(frozen=True)
class PcaModel:
    """Mean vector plus orthonormal principal directions (rows).

    Sign convention: each component's largest-magnitude coordinate is
    positive, which removes the SVD sign ambiguity.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    total_variance: float

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance == 0.0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance


@dataclass(frozen=True)
class UmapParams:
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_components: int = 2
    n_epochs: int = 200
    negative_sample_rate: int = 5
    seed: int = 0
    a: Optional[float] = None   # fitted from min_dist when None
    b: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n_neighbors < 2:
            raise ValueError(f"n_neighbors must be >= 2, got {self.n_neighbors}")
        if self.min_dist < 0:
            raise ValueError(f"min_dist must be >= 0, got {self.min_dist}")
        if (self.a is None) != (self.b is None):
            raise ValueError("a and b must be given together")
        if self.a is not None and (self.a <= 0 or self.b <= 0):
            raise ValueError("curve parameters a, b must be positive")


def pca_fit(X: EmbeddingMatrix, d: int) -> PcaModel:
    """Top-d principal directions of the mean-centered data via SVD."""
    values = X.values
    n, f = values.shape
    if not 1 <= d <= min(n, f):
        raise ValueError(f"d must be in [1, {min(n, f)}], got {d}")
    if n < 2:
        raise ValueError("PCA needs at least 2 rows")
    mean = values.mean(axis=0)
    centered = values - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:d].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    variances = (s ** 2) / (n - 1)
    return PcaModel(mean=mean, components=components,
                    explained_variance=variances[:d].copy(),
                    total_variance=float(variances.sum()))


def pca_transform(model: PcaModel, X: EmbeddingMatrix) -> EmbeddingMatrix:
    if X.values.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"column mismatch: model has {model.mean.shape[0]} features, "
            f"input has {X.values.shape[1]}")
    projected = (X.values - model.mean) @ model.components.T
    return X.with_values(projected, backend="pca",
                         model_id=f"pca-d{model.components.shape[0]}")


def fit_curve_params(min_dist: float, spread: float = 1.0,
                     grid_points: int = 300) -> tuple[float, float]:
    """Least-squares (a, b) for the layout curve 1/(1 + a*x^(2b)).

    Target is 1 for x <= min_dist and exp(-(x - min_dist)/spread) beyond,
    sampled on a uniform grid of `grid_points` points over [0, 3*spread].
    """
    if min_dist < 0:
        raise ValueError(f"min_dist must be >= 0, got {min_dist}")
    xv = np.linspace(0.0, spread * 3.0, grid_points)
    yv = np.where(xv <= min_dist, 1.0, np.exp(-(xv - min_dist) / spread))

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    (a, b), _ = curve_fit(curve, xv, yv, p0=(1.0, 1.0), maxfev=10000)
    return float(a), float(b)


def exact_knn(values: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of each point's k nearest other points,
    ascending by distance (ties broken by index for determinism)."""
    n = values.shape[0]
    if k >= n:
        raise ValueError(f"need n > k, got n={n}, k={k}")
    sq = np.sum(values ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (values @ values.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    idx = np.argsort(d2, axis=1, kind="stable")[:, :k]
    dist = np.sqrt(np.take_along_axis(d2, idx, axis=1))
    return idx, dist


def smooth_knn(dist: np.ndarray, tol: float = SMOOTH_K_TOL,
               max_iter: int = SMOOTH_K_MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Per point: rho = nearest-neighbor distance, and the bandwidth sigma
    solved by bisection so sum_j exp(-max(0, d_j - rho)/sigma) = log2(k)."""
    n, k = dist.shape
    target = np.log2(k)
    rho = dist[:, 0].copy()
    sigma = np.zeros(n)
    for i in range(n):
        lo, hi, mid = 0.0, np.inf, 1.0
        shifted = np.maximum(dist[i] - rho[i], 0.0)
        for _ in range(max_iter):
            psum = float(np.exp(-shifted / mid).sum())
            if abs(psum - target) < tol:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        sigma[i] = mid
    return rho, sigma


def fuzzy_graph(values: np.ndarray, n_neighbors: int) -> np.ndarray:
    """Symmetric fuzzy k-NN membership matrix, combined via a + b - a*b."""
    idx, dist = exact_knn(values, n_neighbors)
    rho, sigma = smooth_knn(dist)
    n = values.shape[0]
    directed = np.zeros((n, n))
    for i in range(n):
        w = np.exp(-np.maximum(dist[i] - rho[i], 0.0) / sigma[i])
        directed[i, idx[i]] = w
    return directed + directed.T - directed * directed.T


def spectral_init(graph: np.ndarray, n_components: int, seed: int) -> np.ndarray:
    """Layout from the first non-trivial eigenvectors of the normalized graph
    Laplacian, scaled so the largest coordinate magnitude is 10. Falls back
    to a seeded uniform layout in [-10, 10] if the eigensolve fails."""
    n = graph.shape[0]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xD1])))
    try:
        deg = graph.sum(axis=1)
        inv_sqrt = 1.0 / np.sqrt(np.maximum(deg, 1e-12))
        lap = np.eye(n) - (inv_sqrt[:, None] * graph * inv_sqrt[None, :])
        _, vecs = np.linalg.eigh(lap)
        coords = vecs[:, 1:n_components + 1].copy()
        for j in range(coords.shape[1]):
            col = coords[:, j]
            if col[np.argmax(np.abs(col))] < 0:
                coords[:, j] = -col
        max_abs = np.abs(coords).max()
        if max_abs == 0.0 or not np.isfinite(max_abs):
            raise np.linalg.LinAlgError("degenerate spectral coordinates")
        return coords * (10.0 / max_abs)
    except np.linalg.LinAlgError:
        return rng.uniform(-10.0, 10.0, size=(n, n_components))


@numba.njit(cache=True)
def _xorshift(state: np.uint64) -> np.uint64:
    state ^= state >> np.uint64(12)
    state ^= state << np.uint64(25)
    state ^= state >> np.uint64(27)
    return state * np.uint64(0x2545F4914F6CDD1D)


@numba.njit(cache=True)
def _optimize_layout(emb, heads, tails, epochs_per_sample, n_epochs,
                     a, b, negative_sample_rate, seed, initial_lr):
    """Sequential SGD over the edge schedule: an edge is processed whenever
    the epoch passes its next due time, attracting both endpoints, then each
    visit repels the head from negative_sample_rate random points."""
    n = emb.shape[0]
    dim = emb.shape[1]
    n_edges = heads.shape[0]
    next_due = epochs_per_sample.copy()
    # splitmix64 scramble so nearby seeds give unrelated streams
    state = np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)
    state = (state ^ (state >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    state = (state ^ (state >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    state = state ^ (state >> np.uint64(31))
    if state == np.uint64(0):
        state = np.uint64(1)

    for epoch in range(n_epochs):
        alpha = initial_lr * (1.0 - epoch / n_epochs)
        for e in range(n_edges):
            if next_due[e] > epoch:
                continue
            i = heads[e]
            j = tails[e]
            d2 = 0.0
            for c in range(dim):
                diff = emb[i, c] - emb[j, c]
                d2 += diff * diff
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (1.0 + a * d2 ** b)
                for c in range(dim):
                    g = coeff * (emb[i, c] - emb[j, c])
                    if g > 4.0:
                        g = 4.0
                    elif g < -4.0:
                        g = -4.0
                    emb[i, c] += alpha * g
                    emb[j, c] -= alpha * g
            next_due[e] += epochs_per_sample[e]

            for _ in range(negative_sample_rate):
                state = _xorshift(state)
                p = int(state >> np.uint64(32)) % n
                if p == i:
                    continue
                d2 = 0.0
                for c in range(dim):
                    diff = emb[i, c] - emb[p, c]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = (2.0 * b) / ((0.001 + d2) * (1.0 + a * d2 ** b))
                    for c in range(dim):
                        g = coeff * (emb[i, c] - emb[p, c])
                        if g > 4.0:
                            g = 4.0
                        elif g < -4.0:
                            g = -4.0
                        emb[i, c] += alpha * g
                else:
                    for c in range(dim):
                        emb[i, c] += alpha * 4.0
    return emb


def umap_fit_transform(X: EmbeddingMatrix, params: UmapParams) -> EmbeddingMatrix:
    """Embed X into params.n_components dimensions.

    Pipeline: exact k-NN -> smooth-k bandwidths -> fuzzy union graph ->
    spectral initialization -> sequential SGD layout. Deterministic for a
    fixed (X, params).
    """
    n = X.values.shape[0]
    if n <= params.n_neighbors:
        raise ValueError(
            f"need n > n_neighbors, got n={n}, n_neighbors={params.n_neighbors}")
    graph = fuzzy_graph(X.values, params.n_neighbors)
    if params.a is None:
        a, b = fit_curve_params(params.min_dist)
    else:
        a, b = params.a, params.b

    coords = spectral_init(graph, params.n_components, params.seed)

    # edges sampled less than once over the run are dropped, as are
    # self-loops (none expected); order fixed by (row, col)
    w_max = graph.max()
    if w_max <= 0.0:
        raise ValueError("fuzzy graph has no positive memberships")
    rows, cols = np.nonzero(graph >= w_max / params.n_epochs)
    weights = graph[rows, cols]
    epochs_per_sample = w_max / weights

    emb = np.ascontiguousarray(coords, dtype=np.float64)
    emb = _optimize_layout(
        emb,
        rows.astype(np.int64), cols.astype(np.int64),
        epochs_per_sample.astype(np.float64),
        int(params.n_epochs), float(a), float(b),
        int(params.negative_sample_rate), int(params.seed) & 0xFFFFFFFFFFFFFFFF,
        1.0,
    )
    return X.with_values(emb, backend="umap",
                         model_id=f"umap-k{params.n_neighbors}")
