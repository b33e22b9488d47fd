"""Minimal SVG line charts for sweep summaries."""

from __future__ import annotations

import os
from typing import Sequence
from xml.sax.saxutils import escape

from .simulator import SummaryRow

__all__ = ["series_from_summary", "render_svg", "write_svg"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 50


def series_from_summary(rows: Sequence[SummaryRow], metric: str) -> dict[str, list[tuple[float, float]]]:
    """Points per series for one metric, keyed by scheme (plus objective if mixed)."""
    picked = [r for r in rows if r.metric == metric]
    if not picked:
        raise ValueError(f"metric {metric!r} not found in summary")
    mixed = len({r.objective for r in picked}) > 1
    out: dict[str, list[tuple[float, float]]] = {}
    for r in picked:
        label = f"{r.scheme}/{r.objective}" if mixed else r.scheme
        out.setdefault(label, []).append((float(r.sweep_value), float(r.mean)))
    return {k: sorted(v) for k, v in out.items()}


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_svg(series: dict[str, list[tuple[float, float]]], xlabel: str = "", ylabel: str = "") -> str:
    """One polyline per series, plain axes and a legend."""
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(ys), 0.0), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
             f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>']
    for t in _ticks(x0, x1):
        parts.append(f'<text x="{px(t):.1f}" y="{TOP + ph + 18}" font-size="11" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        parts.append(f'<text x="{LEFT - 6}" y="{py(t) + 4:.1f}" font-size="11" text-anchor="end">{t:.4g}</text>')
    parts.append(f'<text x="{LEFT + pw / 2}" y="{H - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{TOP + ph / 2}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 16 {TOP + ph / 2})">{escape(ylabel)}</text>')
    for i, (label, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}">'
                     f'<title>{escape(label)}</title></polyline>')
        ly = TOP + 16 * i + 8
        parts.append(f'<rect x="{LEFT + pw + 12}" y="{ly - 8}" width="14" height="3" fill="{color}"/>')
        parts.append(f'<text x="{LEFT + pw + 32}" y="{ly - 2}" font-size="11">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(rows: Sequence[SummaryRow], metric: str, path: str | os.PathLike) -> None:
    series = series_from_summary(rows, metric)
    xlabel = rows[0].sweep_var if rows else ""
    svg = render_svg(series, xlabel=xlabel, ylabel=metric)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
    except OSError as exc:
        raise OSError(f"cannot write SVG {path}: {exc}") from exc
