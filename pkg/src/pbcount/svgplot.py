"""Tiny dependency-free SVG charts for CLI output.

Just enough plotting for sweep curves, reliability diagrams, and entropy
histograms: fixed canvas, linear axes, a handful of series colors. Not a
general charting library and not trying to be one.
"""

from __future__ import annotations

import math

_WIDTH, _HEIGHT = 640, 400
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 20, 34, 48
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _finite(values):
    return [v for v in values if v is not None and math.isfinite(v)]


def _span(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        pad = max(abs(lo), 1.0) * 0.05
        return lo - pad, hi + pad
    return lo, hi


class _Canvas:
    def __init__(self, title, xlabel, ylabel, xlim, ylim):
        self.xlim = _span(*xlim)
        self.ylim = _span(*ylim)
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
            f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
            f'<text x="{_WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
            f'<text x="{_WIDTH / 2}" y="{_HEIGHT - 10}" text-anchor="middle">{xlabel}</text>',
            f'<text x="16" y="{_HEIGHT / 2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {_HEIGHT / 2})">{ylabel}</text>',
        ]
        self._axes()

    def x(self, v: float) -> float:
        lo, hi = self.xlim
        return _MARGIN_L + (v - lo) / (hi - lo) * (_WIDTH - _MARGIN_L - _MARGIN_R)

    def y(self, v: float) -> float:
        lo, hi = self.ylim
        return _HEIGHT - _MARGIN_B - (v - lo) / (hi - lo) * (_HEIGHT - _MARGIN_T - _MARGIN_B)

    def _axes(self):
        x0, x1 = _MARGIN_L, _WIDTH - _MARGIN_R
        y0, y1 = _HEIGHT - _MARGIN_B, _MARGIN_T
        self.parts.append(
            f'<path d="M {x0} {y1} L {x0} {y0} L {x1} {y0}" fill="none" stroke="#444"/>')
        for i in range(5):
            fx = self.xlim[0] + (self.xlim[1] - self.xlim[0]) * i / 4
            fy = self.ylim[0] + (self.ylim[1] - self.ylim[0]) * i / 4
            px, py = self.x(fx), self.y(fy)
            self.parts.append(
                f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 4}" stroke="#444"/>'
                f'<text x="{px:.1f}" y="{y0 + 18}" text-anchor="middle">{fx:.3g}</text>')
            self.parts.append(
                f'<line x1="{x0 - 4}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="#444"/>'
                f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end">{fy:.3g}</text>')

    def polyline(self, xs, ys, color: str, label: str | None = None, index: int = 0):
        pts = " ".join(f"{self.x(px):.1f},{self.y(py):.1f}"
                       for px, py in zip(xs, ys)
                       if math.isfinite(px) and math.isfinite(py))
        if pts:
            self.parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = _MARGIN_T + 14 + 16 * index
            lx = _WIDTH - _MARGIN_R - 130
            self.parts.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="1.5"/>'
                f'<text x="{lx + 28}" y="{ly}">{label}</text>')

    def bars(self, xs, heights, width: float, color: str, opacity: float = 0.8):
        y0 = self.y(max(self.ylim[0], 0.0))
        for bx, h in zip(xs, heights):
            if not math.isfinite(h):
                continue
            px, py = self.x(bx), self.y(h)
            pw = self.x(bx + width) - px
            self.parts.append(
                f'<rect x="{px:.1f}" y="{min(py, y0):.1f}" width="{pw:.1f}" '
                f'height="{abs(y0 - py):.1f}" fill="{color}" fill-opacity="{opacity}"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"])


def line_chart(series: dict[str, tuple[list, list]], title: str,
               xlabel: str, ylabel: str) -> str:
    """Render named (xs, ys) series as colored polylines with a legend."""
    all_x = _finite([v for xs, _ in series.values() for v in xs]) or [0.0, 1.0]
    all_y = _finite([v for _, ys in series.values() for v in ys]) or [0.0, 1.0]
    cv = _Canvas(title, xlabel, ylabel, (min(all_x), max(all_x)), (min(all_y), max(all_y)))
    for i, (name, (xs, ys)) in enumerate(series.items()):
        cv.polyline(xs, ys, _COLORS[i % len(_COLORS)], label=name, index=i)
    return cv.render()


def reliability_chart(report, title: str) -> str:
    """Reliability diagram: per-bin accuracy bars plus the identity line."""
    edges = list(report.bin_edges)
    width = edges[1] - edges[0]
    cv = _Canvas(title, "predicted probability", "observed frequency", (0.0, 1.0), (0.0, 1.0))
    heights = [a if c > 0 else float("nan")
               for a, c in zip(report.bin_accuracy, report.bin_count)]
    cv.bars(edges[:-1], heights, width, _COLORS[0])
    cv.polyline([0.0, 1.0], [0.0, 1.0], "#888")
    cv.parts.append(
        f'<text x="{_WIDTH - _MARGIN_R - 8}" y="{_MARGIN_T + 14}" text-anchor="end">'
        f'ece={report.ece:.4f} mce={report.mce:.4f}</text>')
    return cv.render()


def histogram_chart(hist: dict, title: str) -> str:
    """Two overlaid histograms (correct vs incorrect) over [0, 1]."""
    edges = hist["bin_edges"]
    width = edges[1] - edges[0]
    top = max(max(hist["correct"], default=0), max(hist["incorrect"], default=0), 1)
    cv = _Canvas(title, "normalized entropy", "samples", (0.0, 1.0), (0.0, float(top)))
    cv.bars(edges[:-1], hist["correct"], width, _COLORS[2], opacity=0.6)
    cv.bars(edges[:-1], hist["incorrect"], width, _COLORS[1], opacity=0.6)
    cv.polyline([], [], _COLORS[2], label="correct", index=0)
    cv.polyline([], [], _COLORS[1], label="incorrect", index=1)
    return cv.render()
