"""Self-contained SVG line charts, deterministic byte-for-byte.

One fixed 800x600 viewport, no external assets, no timestamps, floats
printed with %.6g so identical inputs give identical files.  Series are
drawn as mean lines with optional +-1 standard deviation bands.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["line_chart"]

WIDTH, HEIGHT = 800, 600
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 24, 48, 64

PALETTE = ["#1f6fb2", "#d1495b", "#3a7d44", "#8e6fb8", "#c88f2f", "#3b8ea5"]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    ticks = [10.0 ** e for e in range(lo_e, hi_e + 1)]
    return [t for t in ticks if lo / 1.0001 <= t <= hi * 1.0001]


class _Scale:
    def __init__(self, lo, hi, out_lo, out_hi, log):
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.out_lo, self.out_hi, self.log = lo, hi, out_lo, out_hi, log

    def __call__(self, v):
        v = math.log10(v) if self.log else v
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.out_lo + frac * (self.out_hi - self.out_lo)


def line_chart(path: str, x: np.ndarray, series: list, title: str,
               xlabel: str, ylabel: str, log_x: bool = False,
               log_y: bool = False) -> None:
    """Write an 800x600 SVG of mean lines with optional std bands.

    ``series`` is a list of (label, mean, std-or-None) triples sharing the
    x grid.  NaN means are dropped pointwise.  Log axes require positive
    data; nonpositive points are dropped on a log axis.
    """
    x = np.asarray(x, dtype=float)
    xs_all, ys_all = [], []
    cleaned = []
    for label, mean, std in series:
        mean = np.asarray(mean, dtype=float)
        std = None if std is None else np.asarray(std, dtype=float)
        ok = np.isfinite(mean) & np.isfinite(x)
        if log_x:
            ok &= x > 0
        if log_y:
            ok &= mean > 0
        xi, mi = x[ok], mean[ok]
        si = std[ok] if std is not None else None
        cleaned.append((label, xi, mi, si))
        xs_all.append(xi)
        ys_all.append(mi if si is None else mi + si)
        ys_all.append(mi if si is None else np.maximum(mi - si,
                                                       mi * 0.1 if log_y else mi - si))
    xs_all = np.concatenate(xs_all) if xs_all else np.array([0.0, 1.0])
    ys_all = np.concatenate(ys_all) if ys_all else np.array([0.0, 1.0])
    if xs_all.size == 0:
        xs_all = np.array([0.0, 1.0])
    if ys_all.size == 0:
        ys_all = np.array([0.0, 1.0])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if not log_y:
        pad = 0.05 * (y_hi - y_lo or 1.0)
        y_lo, y_hi = y_lo - pad, y_hi + pad
        if y_lo > 0 and y_lo < 0.3 * y_hi:
            y_lo = 0.0
    sx = _Scale(x_lo, x_hi, MARGIN_L, WIDTH - MARGIN_R, log_x)
    sy = _Scale(y_lo, y_hi, HEIGHT - MARGIN_B, MARGIN_T, log_y)

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
               f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')
    out.append(f'<text x="{WIDTH // 2}" y="28" text-anchor="middle" '
               f'font-family="sans-serif" font-size="17">{title}</text>')

    x_ticks = _log_ticks(x_lo, x_hi) if log_x else _nice_ticks(x_lo, x_hi)
    y_ticks = _log_ticks(y_lo, y_hi) if log_y else _nice_ticks(y_lo, y_hi)
    for t in x_ticks:
        px = sx(t)
        out.append(f'<line x1="{_fmt(px)}" y1="{MARGIN_T}" x2="{_fmt(px)}" '
                   f'y2="{HEIGHT - MARGIN_B}" stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN_B + 20}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="12">{_fmt(t)}</text>')
    for t in y_ticks:
        py = sy(t)
        out.append(f'<line x1="{MARGIN_L}" y1="{_fmt(py)}" x2="{WIDTH - MARGIN_R}" '
                   f'y2="{_fmt(py)}" stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="12">{_fmt(t)}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" '
               f'width="{WIDTH - MARGIN_L - MARGIN_R}" '
               f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" '
               f'stroke="#333333" stroke-width="1"/>')
    out.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 16}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="14">{xlabel}</text>')
    out.append(f'<text x="22" y="{HEIGHT // 2}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="14" '
               f'transform="rotate(-90 22 {HEIGHT // 2})">{ylabel}</text>')

    for idx, (label, xi, mi, si) in enumerate(cleaned):
        color = PALETTE[idx % len(PALETTE)]
        if xi.size == 0:
            continue
        if si is not None and xi.size > 1:
            hi_band = mi + si
            lo_band = mi - si
            if log_y:
                lo_band = np.maximum(lo_band, 1e-300)
                lo_band = np.where(lo_band <= 0, mi * 0.1, lo_band)
            pts = [f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(xi, hi_band)]
            pts += [f"{_fmt(sx(a))},{_fmt(sy(b))}"
                    for a, b in zip(xi[::-1], lo_band[::-1])]
            out.append(f'<polygon points="{" ".join(pts)}" fill="{color}" '
                       f'fill-opacity="0.15" stroke="none"/>')
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(xi, mi))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="2"/>')
        for a, b in zip(xi, mi):
            out.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="3" '
                       f'fill="{color}"/>')

    ly = MARGIN_T + 12
    for idx, (label, _, _, _) in enumerate(cleaned):
        color = PALETTE[idx % len(PALETTE)]
        out.append(f'<line x1="{WIDTH - MARGIN_R - 150}" y1="{ly}" '
                   f'x2="{WIDTH - MARGIN_R - 120}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - MARGIN_R - 112}" y="{ly + 4}" '
                   f'font-family="sans-serif" font-size="13">{label}</text>')
        ly += 18

    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
