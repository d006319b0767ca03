"""
Minimal SVG line and bar charts for AMOS-VPR reports
"""

from html import escape
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

WIDTH = 640
HEIGHT = 420
PADDING = 60
COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]


def _frame(title: str, xlabel: str, ylabel: str) -> List[str]:
    plot_bottom = HEIGHT - PADDING
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{PADDING / 2:.1f}" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{escape(title)}</text>',
        f'<line x1="{PADDING}" y1="{plot_bottom}" x2="{WIDTH - PADDING}" y2="{plot_bottom}" stroke="black"/>',
        f'<line x1="{PADDING}" y1="{PADDING}" x2="{PADDING}" y2="{plot_bottom}" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 15 {HEIGHT / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = _scale_y(tick)
        parts.append(f'<line x1="{PADDING - 4}" y1="{y:.2f}" x2="{PADDING}" y2="{y:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{PADDING - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="10" '
            f'font-family="sans-serif">{tick:.2f}</text>'
        )
    return parts


def _scale_x(value: float) -> float:
    return PADDING + value * (WIDTH - 2 * PADDING)


def _scale_y(value: float) -> float:
    return HEIGHT - PADDING - value * (HEIGHT - 2 * PADDING)


def _write(parts: List[str], path: str) -> str:
    parts.append("</svg>")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    text = "\n".join(parts) + "\n"
    out.write_text(text)
    return text


def line_plot(
    series: Dict[str, Sequence[Tuple[float, float]]], path: str, title: str, xlabel: str, ylabel: str
) -> str:
    """Polylines of (x, y) points on unit axes, one per named series"""
    parts = _frame(title, xlabel, ylabel)
    for i, (name, points) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{_scale_x(min(max(x, 0.0), 1.0)):.2f},{_scale_y(min(max(y, 0.0), 1.0)):.2f}" for x, y in points)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        legend_y = PADDING + 16 * i
        parts.append(f'<rect x="{WIDTH - PADDING - 120}" y="{legend_y}" width="10" height="10" fill="{color}"/>')
        parts.append(
            f'<text x="{WIDTH - PADDING - 105}" y="{legend_y + 9}" font-size="11" '
            f'font-family="sans-serif">{escape(name)}</text>'
        )
    return _write(parts, path)


def bar_plot(values: Dict[str, float], path: str, title: str, ylabel: str = "AUC") -> str:
    """One bar per label on a [0, 1] value axis"""
    parts = _frame(title, "", ylabel)
    n = max(len(values), 1)
    slot = (WIDTH - 2 * PADDING) / n
    for i, (label, value) in enumerate(values.items()):
        clipped = min(max(value, 0.0), 1.0)
        x = PADDING + i * slot + slot * 0.15
        top = _scale_y(clipped)
        parts.append(
            f'<rect x="{x:.2f}" y="{top:.2f}" width="{slot * 0.7:.2f}" height="{HEIGHT - PADDING - top:.2f}" '
            f'fill="{COLORS[i % len(COLORS)]}"/>'
        )
        parts.append(
            f'<text x="{x + slot * 0.35:.2f}" y="{top - 4:.2f}" text-anchor="middle" font-size="10" '
            f'font-family="sans-serif">{value:.3f}</text>'
        )
        parts.append(
            f'<text x="{x + slot * 0.35:.2f}" y="{HEIGHT - PADDING + 14}" text-anchor="middle" font-size="10" '
            f'font-family="sans-serif">{escape(label)}</text>'
        )
    return _write(parts, path)
