"""Minimal deterministic SVG line/polar plots.

Renders the standard figure types of this package (sensitivity curves,
posterior densities, time traces, spectra) as standalone SVG text with no
plotting dependency. Layout is fixed and float formatting is pinned, so a
given dataset always produces identical bytes. Data fidelity lives in the
CSV outputs; these plots are for eyeballing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Series", "line_plot", "polar_plot"]

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#7f7f7f"]
_MAX_POINTS = 4000  # decimate beyond this, plots stay light


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0**e for e in range(int(lo_e), int(hi_e) + 1) if lo <= 10.0**e <= hi]


def _tick_label(v: float) -> str:
    if v == 0.0:
        return "0"
    a = abs(v)
    if 1e-3 <= a < 1e4:
        s = f"{v:.4g}"
    else:
        s = f"{v:.1e}"
    return s


def _decimate(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if x.size <= _MAX_POINTS:
        return x, y
    stride = int(math.ceil(x.size / _MAX_POINTS))
    return x[::stride], y[::stride]


def line_plot(
    series: list[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 760,
    height: int = 480,
) -> str:
    """Render line series into a standalone SVG string."""
    margin_l, margin_r, margin_t, margin_b = 78, 20, 34, 52
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b

    def prep(vals: np.ndarray, log: bool) -> np.ndarray:
        v = np.asarray(vals, dtype=float)
        if log:
            v = np.where(v > 0.0, v, np.nan)
            return np.log10(v)
        return v

    xs, ys = [], []
    plotted: list[tuple[Series, np.ndarray, np.ndarray]] = []
    for s in series:
        x, y = _decimate(np.asarray(s.x, float), np.asarray(s.y, float))
        px, py = prep(x, logx), prep(y, logy)
        plotted.append((s, px, py))
        xs.append(px[np.isfinite(px)])
        ys.append(py[np.isfinite(py)])
    all_x = np.concatenate(xs) if xs else np.array([0.0])
    all_y = np.concatenate(ys) if ys else np.array([0.0])
    if all_x.size == 0:
        all_x = np.array([0.0])
    if all_y.size == 0:
        all_y = np.array([0.0])

    def bounds(v: np.ndarray) -> tuple[float, float]:
        lo, hi = float(np.min(v)), float(np.max(v))
        if hi - lo < 1e-12:
            lo, hi = lo - 1.0, hi + 1.0
        pad = 0.04 * (hi - lo)
        return lo - pad, hi + pad

    x_lo, x_hi = bounds(all_x)
    y_lo, y_hi = bounds(all_y)

    def sx(v: float) -> float:
        return margin_l + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v: float) -> float:
        return margin_t + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
            f'font-size="14">{title}</text>'
        )

    if logx:
        xticks = [math.log10(t) for t in _log_ticks(10.0**x_lo, 10.0**x_hi)]
        xlabels = [_tick_label(10.0**t) for t in xticks]
    else:
        xticks = _nice_ticks(x_lo, x_hi)
        xlabels = [_tick_label(t) for t in xticks]
    for t, lab in zip(xticks, xlabels):
        px = sx(t)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{margin_t + ph}" x2="{_fmt(px)}" '
            f'y2="{margin_t + ph + 5}" stroke="#333"/>'
        )
        out.append(
            f'<line x1="{_fmt(px)}" y1="{margin_t}" x2="{_fmt(px)}" '
            f'y2="{margin_t + ph}" stroke="#ddd" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{margin_t + ph + 18}" '
            f'text-anchor="middle">{lab}</text>'
        )
    if logy:
        yticks = [math.log10(t) for t in _log_ticks(10.0**y_lo, 10.0**y_hi)]
        ylabels = [_tick_label(10.0**t) for t in yticks]
    else:
        yticks = _nice_ticks(y_lo, y_hi)
        ylabels = [_tick_label(t) for t in yticks]
    for t, lab in zip(yticks, ylabels):
        py = sy(t)
        out.append(
            f'<line x1="{margin_l - 5}" y1="{_fmt(py)}" x2="{margin_l}" '
            f'y2="{_fmt(py)}" stroke="#333"/>'
        )
        out.append(
            f'<line x1="{margin_l}" y1="{_fmt(py)}" x2="{margin_l + pw}" '
            f'y2="{_fmt(py)}" stroke="#ddd" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{margin_l - 8}" y="{_fmt(py + 4)}" '
            f'text-anchor="end">{lab}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{margin_l + pw / 2:.0f}" y="{height - 12}" '
            f'text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{margin_t + ph / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {margin_t + ph / 2:.0f})">{ylabel}</text>'
        )

    for i, (s, px, py) in enumerate(plotted):
        color = _PALETTE[i % len(_PALETTE)]
        pts = [
            f"{_fmt(sx(a))},{_fmt(sy(b))}"
            for a, b in zip(px, py)
            if math.isfinite(a) and math.isfinite(b)
        ]
        if not pts:
            continue
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        out.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"{dash}/>'
        )
    # legend, top-right inside the frame
    for i, (s, _, _) in enumerate(plotted):
        if not s.label:
            continue
        color = _PALETTE[i % len(_PALETTE)]
        ly = margin_t + 16 + 16 * i
        lx = margin_l + pw - 170
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{lx + 28}" y="{ly}">{s.label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def polar_plot(
    phi: np.ndarray,
    radius: np.ndarray,
    label: str = "",
    title: str = "",
    size: int = 520,
) -> str:
    """Quadrant polar plot: angle is the phase in [0, pi/2], radius the
    plotted quantity normalized to its maximum."""
    phi = np.asarray(phi, dtype=float)
    radius = np.asarray(radius, dtype=float)
    r_max = float(np.max(radius)) if radius.size else 1.0
    if r_max <= 0.0:
        r_max = 1.0
    margin = 56
    extent = size - 2 * margin
    cx, cy = margin, size - margin  # origin bottom-left, quadrant opens up-right

    def px(r: float, a: float) -> tuple[float, float]:
        rr = r / r_max * extent
        return cx + rr * math.cos(a), cy - rr * math.sin(a)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{size / 2:.0f}" y="22" text-anchor="middle" '
            f'font-size="14">{title}</text>'
        )
    for frac in (0.25, 0.5, 0.75, 1.0):
        rr = frac * extent
        out.append(
            f'<path d="M {_fmt(cx + rr)} {_fmt(cy)} A {_fmt(rr)} {_fmt(rr)} 0 0 0 '
            f'{_fmt(cx)} {_fmt(cy - rr)}" fill="none" stroke="#ddd"/>'
        )
        out.append(
            f'<text x="{_fmt(cx + rr + 2)}" y="{_fmt(cy + 14)}" '
            f'text-anchor="middle" font-size="10">{_tick_label(frac * r_max)}</text>'
        )
    for deg in range(0, 91, 15):
        a = math.radians(deg)
        ex, ey = px(r_max, a)
        out.append(
            f'<line x1="{cx}" y1="{cy}" x2="{_fmt(ex)}" y2="{_fmt(ey)}" '
            'stroke="#ddd" stroke-width="0.5"/>'
        )
        lx, ly = px(1.06 * r_max, a)
        out.append(
            f'<text x="{_fmt(lx)}" y="{_fmt(ly)}" text-anchor="middle" '
            f'font-size="10">{deg}&#176;</text>'
        )
    pts = " ".join(
        f"{_fmt(x)},{_fmt(y)}"
        for x, y in (px(r, a) for r, a in zip(radius, phi))
        if math.isfinite(x) and math.isfinite(y)
    )
    out.append(
        f'<polyline points="{pts}" fill="none" stroke="{_PALETTE[0]}" '
        'stroke-width="1.5"/>'
    )
    if label:
        out.append(f'<text x="{size - 10}" y="{size - 10}" text-anchor="end">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
