"""Minimal standalone SVG charts: line plots, grouped bars and heat maps."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"]

W, H = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 190, 40, 60


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    a = abs(v)
    if a >= 1e4 or a < 1e-2:
        return f"{v:.0e}"
    return f"{v:.3g}"


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        step = max(1, (b - a) // 6)
        return [10.0**e for e in range(a, b + 1, step)]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return list(np.arange(start, hi + step * 1e-9, step))


class _Frame:
    def __init__(self, xlim, ylim, logy=False, logx=False):
        self.logx, self.logy = logx, logy
        self.xlim, self.ylim = xlim, ylim

    def _t(self, v, lim, log):
        lo, hi = lim
        if log:
            v, lo, hi = math.log10(v), math.log10(lo), math.log10(hi)
        return 0.5 if hi == lo else (v - lo) / (hi - lo)

    def x(self, v):
        return LEFT + self._t(v, self.xlim, self.logx) * (W - LEFT - RIGHT)

    def y(self, v):
        return H - BOTTOM - self._t(v, self.ylim, self.logy) * (H - TOP - BOTTOM)


def _header(title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{(W - RIGHT + LEFT) / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]


def _axes(fr: _Frame, xlabel, ylabel, xticks=None):
    out = [
        f'<rect x="{LEFT}" y="{TOP}" width="{W - LEFT - RIGHT}" height="{H - TOP - BOTTOM}" '
        'fill="none" stroke="black"/>'
    ]
    for t in _ticks(*fr.ylim, fr.logy):
        if not fr.ylim[0] <= t <= fr.ylim[1] * (1 + 1e-12):
            continue
        y = fr.y(t)
        out.append(f'<line x1="{LEFT}" x2="{W - RIGHT}" y1="{y:.1f}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    if xticks is None:
        xticks = [(t, _fmt(t)) for t in _ticks(*fr.xlim, fr.logx) if fr.xlim[0] <= t <= fr.xlim[1]]
    for t, lab in xticks:
        x = fr.x(t)
        out.append(f'<line x1="{x:.1f}" x2="{x:.1f}" y1="{H - BOTTOM}" y2="{H - BOTTOM + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{H - BOTTOM + 18}" text-anchor="middle">{escape(str(lab))}</text>')
    out.append(f'<text x="{(W - RIGHT + LEFT) / 2:.1f}" y="{H - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{(H - BOTTOM + TOP) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(H - BOTTOM + TOP) / 2:.1f})">{escape(ylabel)}</text>'
    )
    return out


def _legend(names):
    out = []
    for i, name in enumerate(names):
        y = TOP + 10 + 18 * i
        c = PALETTE[i % len(PALETTE)]
        out.append(f'<line x1="{W - RIGHT + 12}" x2="{W - RIGHT + 36}" y1="{y}" y2="{y}" stroke="{c}" stroke-width="2.5"/>')
        out.append(f'<text x="{W - RIGHT + 42}" y="{y + 4}">{escape(name)}</text>')
    return out


def line_plot(series: dict, title: str, xlabel: str, ylabel: str, logy: bool = False) -> str:
    """``series`` maps a legend label to ``(x, y)`` arrays."""
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    if logy:
        ys = ys[ys > 0]
    if ys.size == 0:
        ys = np.array([1.0])
    ylo, yhi = float(ys.min()), float(ys.max())
    if not logy:
        ylo = min(0.0, ylo)
    if yhi == ylo:
        yhi = ylo + 1.0
    fr = _Frame((float(xs.min()), float(xs.max())), (ylo, yhi), logy=logy)
    out = _header(title) + _axes(fr, xlabel, ylabel)
    for i, (name, (x, y)) in enumerate(series.items()):
        pts = []
        for a, b in zip(np.asarray(x, float), np.asarray(y, float)):
            if logy and b <= 0:
                continue
            pts.append(f"{fr.x(a):.1f},{fr.y(b):.1f}")
        c = PALETTE[i % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.6" points="{" ".join(pts)}"/>')
    out += _legend(list(series))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_plot(groups: list, series: dict, title: str, ylabel: str, xlabel: str = "") -> str:
    """Grouped bars; ``series`` maps a legend label to one value per group (NaN = absent)."""
    vals = np.array([v for vs in series.values() for v in vs], float)
    yhi = float(np.nanmax(vals)) if np.isfinite(vals).any() else 1.0
    fr = _Frame((0.0, float(len(groups))), (0.0, yhi * 1.08 or 1.0))
    ticks = [(g + 0.5, lab) for g, lab in enumerate(groups)]
    out = _header(title) + _axes(fr, xlabel, ylabel, xticks=ticks)
    k = len(series)
    bw = 0.8 / max(k, 1)
    for i, (name, vs) in enumerate(series.items()):
        c = PALETTE[i % len(PALETTE)]
        for g, v in enumerate(vs):
            if not np.isfinite(v):
                continue
            x0, x1 = fr.x(g + 0.1 + i * bw), fr.x(g + 0.1 + (i + 1) * bw)
            y0 = fr.y(v)
            out.append(
                f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{x1 - x0:.1f}" height="{fr.y(0) - y0:.1f}" fill="{c}"/>'
            )
    out += _legend(list(series))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(values: np.ndarray, title: str, log: bool = False) -> str:
    """Rows are drawn bottom-up so index ``[0, 0]`` sits at the lower left."""
    v = np.asarray(values, float)
    if log:
        v = np.log10(np.where(v > 0, v, np.nan))
    lo, hi = np.nanmin(v), np.nanmax(v)
    span = hi - lo if hi > lo else 1.0
    ny, nx = v.shape
    cw = (W - LEFT - RIGHT) / nx
    ch = (H - TOP - BOTTOM) / ny
    out = _header(title)
    for j in range(ny):
        for i in range(nx):
            t = 0.0 if not np.isfinite(v[j, i]) else (v[j, i] - lo) / span
            r, g, b = (int(255 * c) for c in _viridis_like(t))
            out.append(
                f'<rect x="{LEFT + i * cw:.2f}" y="{H - BOTTOM - (j + 1) * ch:.2f}" width="{cw + 0.05:.2f}" '
                f'height="{ch + 0.05:.2f}" fill="rgb({r},{g},{b})"/>'
            )
    lab = "log10 " if log else ""
    out.append(f'<text x="{W - RIGHT + 12}" y="{TOP + 14}">{lab}min {_fmt(lo)}</text>')
    out.append(f'<text x="{W - RIGHT + 12}" y="{TOP + 32}">{lab}max {_fmt(hi)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _viridis_like(t: float):
    stops = [(0.267, 0.005, 0.329), (0.229, 0.322, 0.546), (0.128, 0.567, 0.551), (0.369, 0.789, 0.383),
             (0.993, 0.906, 0.144)]
    t = min(max(t, 0.0), 1.0) * (len(stops) - 1)
    i = min(int(t), len(stops) - 2)
    f = t - i
    return tuple(a + (b - a) * f for a, b in zip(stops[i], stops[i + 1]))
