"""Hand-rolled SVG plot emitters.

All output is self-contained SVG with no timestamps and fixed float
formatting, so identical inputs produce identical bytes. Cluster colors come
from a fixed 20-color palette; noise is gray.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .cluster.result import CondensedTree, MergeTable, WssCurve

PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c",
    "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f",
    "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)
NOISE_COLOR = "#999999"

WIDTH, HEIGHT = 640, 480
MARGIN = 48


def color_for(label: int) -> str:
    return NOISE_COLOR if label < 0 else PALETTE[label % len(PALETTE)]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class SvgCanvas:
    def __init__(self, width: int = WIDTH, height: int = HEIGHT):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def add(self, element: str) -> None:
        self.parts.append(element)

    def circle(self, x: float, y: float, r: float, fill: str) -> None:
        self.add(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{fill}"/>')

    def line(self, x1, y1, x2, y2, stroke="#333333", width=1.0, dash="") -> None:
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
                 f'y2="{_fmt(y2)}" stroke="{stroke}" '
                 f'stroke-width="{_fmt(width)}"{extra}/>')

    def rect(self, x, y, w, h, fill, stroke="none") -> None:
        self.add(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
                 f'height="{_fmt(h)}" fill="{fill}" stroke="{stroke}"/>')

    def polyline(self, points: Sequence[tuple[float, float]], stroke="#1f77b4") -> None:
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.add(f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
                 f'stroke-width="1.50"/>')

    def text(self, x, y, content: str, size=11, anchor="start", fill="#333333") -> None:
        content = (content.replace("&", "&amp;").replace("<", "&lt;")
                   .replace(">", "&gt;"))
        self.add(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
                 f'font-family="sans-serif" text-anchor="{anchor}" '
                 f'fill="{fill}">{content}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        body = "\n".join(self.parts)
        return f"{head}\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n{body}\n</svg>\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.render(), encoding="utf-8")


class _Scale:
    """Linear data->pixel mapping with 5% padding."""

    def __init__(self, lo: float, hi: float, px_lo: float, px_hi: float):
        if hi == lo:
            hi = lo + 1.0
        pad = 0.05 * (hi - lo)
        self.lo, self.hi = lo - pad, hi + pad
        self.px_lo, self.px_hi = px_lo, px_hi

    def __call__(self, v: float) -> float:
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.px_lo + frac * (self.px_hi - self.px_lo)


def _axes(canvas: SvgCanvas, title: str) -> None:
    canvas.line(MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN)
    canvas.line(MARGIN, MARGIN, MARGIN, HEIGHT - MARGIN)
    canvas.text(WIDTH / 2, MARGIN / 2, title, size=14, anchor="middle")


def plot_scatter(points: np.ndarray, labels: Sequence[int], path: str | Path,
                 title: str = "cluster scatter") -> None:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError(f"scatter needs (n, 2) points, got shape {points.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(points):
        raise ValueError("labels length must match point count")
    canvas = SvgCanvas()
    _axes(canvas, title)
    sx = _Scale(float(points[:, 0].min()), float(points[:, 0].max()),
                MARGIN, WIDTH - MARGIN)
    sy = _Scale(float(points[:, 1].min()), float(points[:, 1].max()),
                HEIGHT - MARGIN, MARGIN)
    for (x, y), lab in zip(points, labels):
        canvas.circle(sx(x), sy(y), 3.0, color_for(int(lab)))
    canvas.write(path)


def plot_elbow(curve: WssCurve, path: str | Path,
               title: str = "WSS elbow") -> None:
    canvas = SvgCanvas()
    _axes(canvas, title)
    sx = _Scale(float(curve.ks[0]), float(curve.ks[-1]), MARGIN, WIDTH - MARGIN)
    sy = _Scale(0.0, float(max(curve.wss)), HEIGHT - MARGIN, MARGIN)
    pts = [(sx(k), sy(w)) for k, w in zip(curve.ks, curve.wss)]
    canvas.polyline(pts)
    for (px, py), k in zip(pts, curve.ks):
        canvas.circle(px, py, 3.0, "#1f77b4")
        canvas.text(px, HEIGHT - MARGIN + 14, str(k), anchor="middle")
    cx = sx(curve.chosen_k)
    canvas.line(cx, MARGIN, cx, HEIGHT - MARGIN, stroke="#d62728", dash="4,3")
    canvas.text(cx + 4, MARGIN + 12, f"k={curve.chosen_k}", fill="#d62728")
    canvas.write(path)


def plot_grouped_bars(grid: Mapping[str, Mapping[str, float]], path: str | Path,
                      title: str = "stability by embedding and algorithm") -> None:
    """Groups on the x axis (e.g. embedding backends), one bar per inner key
    (e.g. clustering algorithm), in sorted key order."""
    groups = sorted(grid.keys())
    if not groups:
        raise ValueError("empty grid")
    series = sorted({s for g in groups for s in grid[g]})
    vmax = max((grid[g][s] for g in groups for s in grid[g]), default=0.0)
    canvas = SvgCanvas()
    _axes(canvas, title)
    sy = _Scale(0.0, max(vmax, 1e-12), HEIGHT - MARGIN, MARGIN)
    span = (WIDTH - 2 * MARGIN) / len(groups)
    bar_w = span * 0.8 / max(len(series), 1)
    for gi, g in enumerate(groups):
        x0 = MARGIN + gi * span + span * 0.1
        for si, s in enumerate(series):
            if s not in grid[g]:
                continue
            v = grid[g][s]
            top = sy(v)
            canvas.rect(x0 + si * bar_w, top, bar_w * 0.92,
                        (HEIGHT - MARGIN) - top, PALETTE[si % len(PALETTE)])
        canvas.text(MARGIN + gi * span + span / 2, HEIGHT - MARGIN + 16, g,
                    anchor="middle")
    for si, s in enumerate(series):
        lx = WIDTH - MARGIN - 130
        ly = MARGIN + 8 + si * 16
        canvas.rect(lx, ly - 9, 10, 10, PALETTE[si % len(PALETTE)])
        canvas.text(lx + 14, ly, s)
    canvas.write(path)


def _leaf_order(table: MergeTable) -> list[int]:
    n = table.n_points
    children = {n + s: (row[0], row[1]) for s, row in enumerate(table.rows)}
    order: list[int] = []
    stack = [2 * n - 2]
    while stack:
        node = stack.pop()
        if node < n:
            order.append(node)
        else:
            left, right = children[node]
            stack.append(right)
            stack.append(left)
    return order


def plot_dendrogram(table: MergeTable, path: str | Path,
                    title: str = "dendrogram") -> None:
    n = table.n_points
    order = _leaf_order(table)
    xpos = {leaf: MARGIN + (WIDTH - 2 * MARGIN) * (i + 0.5) / n
            for i, leaf in enumerate(order)}
    max_d = max((row[2] for row in table.rows), default=1.0)
    sy = _Scale(0.0, max(max_d, 1e-12), HEIGHT - MARGIN, MARGIN)
    canvas = SvgCanvas()
    _axes(canvas, title)
    height = {i: 0.0 for i in range(n)}
    for s, (left, right, dist, _) in enumerate(table.rows):
        xl, xr = xpos[left], xpos[right]
        yl, yr = sy(height[left]), sy(height[right])
        y = sy(dist)
        canvas.line(xl, yl, xl, y)
        canvas.line(xr, yr, xr, y)
        canvas.line(xl, y, xr, y)
        xpos[n + s] = (xl + xr) / 2.0
        height[n + s] = dist
    canvas.write(path)


def plot_condensed_tree(tree: CondensedTree, path: str | Path,
                        title: str = "condensed tree") -> None:
    """Icicle-style view: one rectangle per condensed cluster spanning its
    birth to death density level, width proportional to birth size; selected
    clusters are colored, the rest gray."""
    cluster_rows = [r for r in tree.rows if r[3] > 1]
    births: dict[int, float] = {}
    sizes: dict[int, int] = {}
    parents: dict[int, int] = {}
    for parent, child, lam, csize in tree.rows:
        births.setdefault(parent, 0.0)
        if csize > 1:
            births[child] = lam
            sizes[child] = csize
            parents[child] = parent
    if not births:
        SvgCanvas().write(path)
        return
    root = min(births)
    sizes[root] = sum(s for c, s in sizes.items() if parents.get(c) == root) or 1
    deaths: dict[int, float] = {c: births[c] for c in births}
    for parent, child, lam, csize in tree.rows:
        deaths[parent] = max(deaths[parent], lam)
    lam_max = max(deaths.values())
    sy = _Scale(0.0, max(lam_max, 1e-12), MARGIN, HEIGHT - MARGIN)
    canvas = SvgCanvas(WIDTH, HEIGHT)
    _axes(canvas, title)
    ordered = sorted(births)
    span = (WIDTH - 2 * MARGIN) / len(ordered)
    max_size = max(sizes.values())
    for i, c in enumerate(ordered):
        w = span * 0.9 * (sizes.get(c, 1) / max_size)
        x = MARGIN + i * span + (span - w) / 2.0
        y0 = sy(births[c])
        y1 = sy(deaths[c])
        fill = PALETTE[tree.selected.index(c) % len(PALETTE)] \
            if c in tree.selected else "#cccccc"
        canvas.rect(x, min(y0, y1), max(w, 1.0), max(abs(y1 - y0), 1.0), fill)
        canvas.text(x + w / 2, min(y0, y1) - 3, str(c), anchor="middle", size=9)
    canvas.write(path)
