"""Density-based clustering: HDBSCAN over an exact mutual-reachability graph.

Pipeline: core distances (distance to the min_samples-th nearest neighbour,
counting the point itself) -> mutual reachability max(core_a, core_b, d) ->
Prim MST -> single-linkage hierarchy -> condensation by min_cluster_size ->
excess-of-mass cluster selection. Density levels use lambda = 1/distance,
with distances clamped below at 1e-12 to keep the arithmetic finite.

Degenerate rules: if every pairwise mutual reachability is zero (all points
identical) the result is one cluster when n >= min_cluster_size, else all
noise. If excess-of-mass selects nothing (no density structure), the root is
returned as a single cluster rather than labeling everything noise.
"""
from __future__ import annotations

import numpy as np

from .result import ClusteringResult, CondensedTree, as_values

_MIN_DIST = 1e-12


def mutual_reachability(values: np.ndarray, min_samples: int) -> np.ndarray:
    sq = np.sum(values ** 2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * values @ values.T, 0.0)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, 0.0)
    core = np.sort(dist, axis=1)[:, min_samples - 1]
    mreach = np.maximum(dist, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(mreach, 0.0)
    return mreach


def prim_mst(weights: np.ndarray) -> list[tuple[int, int, float]]:
    """Minimum spanning tree edges (u, v, w) of a dense weight matrix."""
    n = weights.shape[0]
    visited = np.zeros(n, dtype=bool)
    visited[0] = True
    best = weights[0].copy()
    source = np.zeros(n, dtype=np.int64)
    edges = []
    for _ in range(n - 1):
        masked = np.where(visited, np.inf, best)
        j = int(np.argmin(masked))
        edges.append((int(source[j]), j, float(best[j])))
        visited[j] = True
        closer = weights[j] < best
        best[closer] = weights[j][closer]
        source[closer] = j
    return edges


def _single_linkage(edges: list[tuple[int, int, float]], n: int):
    """scipy-style merge list from MST edges sorted by (weight, u, v):
    children[m], dist[m], size[m] for merged ids m in n..2n-2."""
    order = sorted(range(len(edges)),
                   key=lambda e: (edges[e][2], min(edges[e][0], edges[e][1]),
                                  max(edges[e][0], edges[e][1])))
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    children: dict[int, tuple[int, int]] = {}
    dist: dict[int, float] = {}
    size: dict[int, int] = {i: 1 for i in range(n)}
    current: dict[int, int] = {i: i for i in range(n)}
    for step, e in enumerate(order):
        u, v, w = edges[e]
        ru, rv = find(u), find(v)
        cu, cv = current[ru], current[rv]
        new = n + step
        children[new] = (min(cu, cv), max(cu, cv))
        dist[new] = w
        size[new] = size[cu] + size[cv]
        parent[ru] = new
        parent[rv] = new
        current[new] = new
    return children, dist, size


def _condense(children, dist, size, n: int, min_cluster_size: int):
    """Condensed tree rows (parent, child, lambda, child_size). Points fall
    out at the lambda of the split where their branch detached; splits where
    both sides reach min_cluster_size create new condensed clusters."""
    root = 2 * n - 2
    relabel = {root: n}
    next_label = n + 1
    rows: list[tuple[int, int, float, int]] = []
    ignore: set[int] = set()

    def subtree_points(node: int) -> list[int]:
        stack, points = [node], []
        while stack:
            cur = stack.pop()
            if cur < n:
                points.append(cur)
            else:
                stack.extend(children[cur])
        return points

    queue = [root]
    while queue:
        node = queue.pop(0)
        if node < n or node in ignore:
            continue
        lam = 1.0 / max(dist[node], _MIN_DIST)
        left, right = children[node]
        lsize = size[left] if left >= n else 1
        rsize = size[right] if right >= n else 1
        cond = relabel[node]
        if lsize >= min_cluster_size and rsize >= min_cluster_size:
            for child, csize in ((left, lsize), (right, rsize)):
                relabel[child] = next_label
                rows.append((cond, next_label, lam, csize))
                next_label += 1
                queue.append(child)
        elif lsize < min_cluster_size and rsize < min_cluster_size:
            for child in (left, right):
                for p in sorted(subtree_points(child)):
                    rows.append((cond, p, lam, 1))
                ignore.update(s for s in subtree_points(child) if s >= n)
        else:
            keep, drop = (left, right) if lsize >= min_cluster_size else (right, left)
            relabel[keep] = cond
            queue.append(keep)
            for p in sorted(subtree_points(drop)):
                rows.append((cond, p, lam, 1))
            ignore.update(s for s in subtree_points(drop) if s >= n)
    return rows


def _stability(rows, n: int) -> dict[int, float]:
    birth: dict[int, float] = {n: 0.0}
    for parent, child, lam, csize in rows:
        if csize > 1 or child >= n:
            birth[child] = lam
    stab = {c: 0.0 for c in birth}
    for parent, child, lam, csize in rows:
        stab[parent] += (lam - birth[parent]) * csize
    return stab


def _excess_of_mass(rows, stability: dict[int, float], n: int) -> list[int]:
    cluster_children: dict[int, list[int]] = {c: [] for c in stability}
    for parent, child, lam, csize in rows:
        if child >= n:
            cluster_children[parent].append(child)
    stab = dict(stability)
    is_selected = {c: True for c in stab if c != n}

    def descendants(c: int):
        stack = list(cluster_children[c])
        while stack:
            cur = stack.pop()
            yield cur
            stack.extend(cluster_children[cur])

    for node in sorted(is_selected, reverse=True):
        subtree = sum(stab[ch] for ch in cluster_children[node])
        if cluster_children[node] and subtree > stab[node]:
            is_selected[node] = False
            stab[node] = subtree
        else:
            for desc in descendants(node):
                is_selected[desc] = False
    return sorted(c for c, sel in is_selected.items() if sel)


def _medoid(values: np.ndarray, members: np.ndarray) -> np.ndarray:
    sub = values[members]
    d2 = np.sum((sub[:, None, :] - sub[None, :, :]) ** 2, axis=2)
    return sub[int(np.argmin(np.sqrt(d2).sum(axis=1)))]


def hdbscan(X, min_cluster_size: int = 15, min_samples: int | None = None,
            seed: int = 0) -> ClusteringResult:
    values = as_values(X)
    n = values.shape[0]
    if min_samples is None:
        min_samples = min_cluster_size
    if min_cluster_size < 2:
        raise ValueError(f"min_cluster_size must be >= 2, got {min_cluster_size}")
    if n < min_samples:
        raise ValueError(f"need n >= min_samples, got n={n}, min_samples={min_samples}")

    mreach = mutual_reachability(values, min_samples)
    if mreach.max() == 0.0:  # all points identical
        if n >= min_cluster_size:
            labels = np.zeros(n, dtype=np.int64)
            tree = CondensedTree(rows=(), stability={}, selected=())
            return ClusteringResult(algorithm="hdbscan", labels=labels, k=1,
                                    representatives=values[:1].copy(),
                                    extras=tree, seed=seed)
        labels = np.full(n, -1, dtype=np.int64)
        tree = CondensedTree(rows=(), stability={}, selected=())
        return ClusteringResult(algorithm="hdbscan", labels=labels, k=0,
                                representatives=np.empty((0, values.shape[1])),
                                extras=tree, seed=seed)

    edges = prim_mst(mreach)
    children, dist, size = _single_linkage(edges, n)
    rows = _condense(children, dist, size, n, min_cluster_size)
    stability = _stability(rows, n)
    selected = _excess_of_mass(rows, stability, n)

    labels = np.full(n, -1, dtype=np.int64)
    if not selected:
        # no density structure survived selection: fall back to the root
        labels[:] = 0
        reps = _medoid(values, np.arange(n))[None, :]
        tree = CondensedTree(rows=tuple(rows), stability=stability, selected=(n,))
        return ClusteringResult(algorithm="hdbscan", labels=labels, k=1,
                                representatives=reps, extras=tree, seed=seed)

    cluster_parent: dict[int, int] = {}
    exit_cluster = np.full(n, -1, dtype=np.int64)
    for parent, child, lam, csize in rows:
        if child >= n:
            cluster_parent[child] = parent
        else:
            exit_cluster[child] = parent
    selected_set = set(selected)
    label_of = {c: i for i, c in enumerate(selected)}
    for p in range(n):
        c = int(exit_cluster[p])
        while c != -1:
            if c in selected_set:
                labels[p] = label_of[c]
                break
            c = cluster_parent.get(c, -1)

    reps = np.vstack([
        _medoid(values, np.flatnonzero(labels == i)) for i in range(len(selected))
    ])
    tree = CondensedTree(rows=tuple(rows), stability=stability,
                         selected=tuple(selected))
    return ClusteringResult(algorithm="hdbscan", labels=labels, k=len(selected),
                            representatives=reps, extras=tree, seed=seed)
