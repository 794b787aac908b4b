"""Standalone SVG line chart of operator weights over training epochs."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .errors import ContractError
from .nas import TraceRecord, trace_to_csv

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f")

WIDTH, HEIGHT = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 60, 150, 30, 50


def _x_ticks(lo: int, hi: int, count: int = 5) -> list[int]:
    if hi <= lo:
        return [lo]
    step = max(1, round((hi - lo) / count))
    ticks = list(range(lo, hi + 1, step))
    if ticks[-1] != hi:
        ticks.append(hi)
    return ticks


def render_svg(trace: Sequence[TraceRecord], ops: Sequence[str], title: str = "operator weights") -> str:
    if not trace:
        raise ContractError("cannot plot an empty trace")
    epochs = [r.epoch for r in trace]
    e_lo, e_hi = min(epochs), max(epochs)
    span = (e_hi - e_lo) or 1
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def sx(e):
        return LEFT + plot_w * ((e - e_lo) / span if e_hi > e_lo else 0.5)

    def sy(w):
        return TOP + plot_h * (1.0 - w)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{LEFT + plot_w / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for i in range(6):
        w = i / 5
        y = sy(w)
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + plot_w}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">{w:.1f}</text>')
    for e in _x_ticks(e_lo, e_hi):
        x = sx(e)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + plot_h}" x2="{x:.2f}" y2="{TOP + plot_h + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + plot_h + 18}" text-anchor="middle">{e}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>')
    out.append(f'<text x="{LEFT + plot_w / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">epoch</text>')
    out.append(f'<text x="16" y="{TOP + plot_h / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + plot_h / 2:.1f})">weight</text>')

    for k, op in enumerate(ops):
        color = PALETTE[k % len(PALETTE)]
        pts = [(sx(r.epoch), sy(r.summary[op])) for r in trace]
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        out.append(f'<polyline class="series" data-op="{escape(op)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.8" points="{coords}"/>')
        if len(pts) == 1:
            out.append(f'<circle cx="{pts[0][0]:.2f}" cy="{pts[0][1]:.2f}" r="3" fill="{color}"/>')
        ly = TOP + 14 + 18 * k
        lx = LEFT + plot_w + 14
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{escape(op)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(trace: Sequence[TraceRecord], path, ops: Sequence[str] | None = None,
             title: str = "operator weights") -> Path:
    """Write the chart to ``path`` and the trace CSV next to it (same stem, ``.csv``)."""
    if not trace:
        raise ContractError("cannot plot an empty trace")
    ops = list(ops) if ops is not None else list(trace[0].summary)
    path = Path(path)
    path.write_text(render_svg(trace, ops, title))
    path.with_suffix(".csv").write_text(trace_to_csv(trace, ops))
    return path
