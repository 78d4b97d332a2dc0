"""Minimal SVG polyline charts (no plotting dependency).

Output is deterministic: fixed palette, fixed geometry, no timestamps, so
chart files are byte-stable across reruns with identical data.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence, Tuple

Series = Tuple[str, Sequence[float], Sequence[float]]

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)

_W, _H = 640.0, 420.0
_ML, _MR, _MT, _MB = 62.0, 168.0, 34.0, 48.0


def _fmt(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s == "-0" else s


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / (count - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * span:
        out.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return out or [lo, hi]


def polyline_chart(
    path,
    series: Sequence[Series],
    *,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    x_tick_labels: Optional[Sequence[Tuple[float, str]]] = None,
) -> None:
    """Write a line chart of (name, xs, ys) series to an SVG file.

    Series with at most 40 points also get circle markers. Custom x tick
    labels (position, text) replace numeric ticks when given.
    """
    pts = [
        (float(x), float(y))
        for _, xs, ys in series
        for x, y in zip(xs, ys)
        if math.isfinite(x) and math.isfinite(y)
    ]
    if not pts:
        xlo, xhi, ylo, yhi = 0.0, 1.0, 0.0, 1.0
    else:
        xlo = min(p[0] for p in pts)
        xhi = max(p[0] for p in pts)
        ylo = min(p[1] for p in pts)
        yhi = max(p[1] for p in pts)
        if xhi == xlo:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        if yhi == ylo:
            ylo, yhi = ylo - 0.5, yhi + 0.5
        ypad = 0.04 * (yhi - ylo)
        ylo, yhi = ylo - ypad, yhi + ypad

    px0, px1 = _ML, _W - _MR
    py0, py1 = _H - _MB, _MT

    def sx(x: float) -> float:
        return px0 + (x - xlo) / (xhi - xlo) * (px1 - px0)

    def sy(y: float) -> float:
        return py0 + (y - ylo) / (yhi - ylo) * (py1 - py0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(_W)} '
        f'{_fmt(_H)}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_fmt(_W)}" height="{_fmt(_H)}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_fmt((px0 + px1) / 2)}" y="20" text-anchor="middle" '
            f'font-size="14">{_esc(title)}</text>'
        )

    # axes
    parts.append(
        f'<path d="M {_fmt(px0)} {_fmt(py1)} L {_fmt(px0)} {_fmt(py0)} '
        f'L {_fmt(px1)} {_fmt(py0)}" fill="none" stroke="#333"/>'
    )
    for ty in _ticks(ylo, yhi):
        y = sy(ty)
        parts.append(
            f'<line x1="{_fmt(px0 - 4)}" y1="{_fmt(y)}" x2="{_fmt(px1)}" '
            f'y2="{_fmt(y)}" stroke="#ddd"/>'
        )
        parts.append(
            f'<text x="{_fmt(px0 - 8)}" y="{_fmt(y + 4)}" '
            f'text-anchor="end">{_fmt(ty)}</text>'
        )
    xticks = (
        list(x_tick_labels)
        if x_tick_labels is not None
        else [(t, _fmt(t)) for t in _ticks(xlo, xhi)]
    )
    for tx, label in xticks:
        if not xlo - 1e-9 <= tx <= xhi + 1e-9:
            continue
        x = sx(tx)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(py0)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(py0 + 4)}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(py0 + 18)}" '
            f'text-anchor="middle">{_esc(label)}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{_fmt((px0 + px1) / 2)}" y="{_fmt(_H - 10)}" '
            f'text-anchor="middle">{_esc(x_label)}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="16" y="{_fmt((py0 + py1) / 2)}" text-anchor="middle" '
            f'transform="rotate(-90 16 {_fmt((py0 + py1) / 2)})">'
            f"{_esc(y_label)}</text>"
        )

    for i, (name, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        coords = [
            (sx(float(x)), sy(float(y)))
            for x, y in zip(xs, ys)
            if math.isfinite(float(x)) and math.isfinite(float(y))
        ]
        if len(coords) > 1:
            d = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in coords)
            parts.append(
                f'<polyline points="{d}" fill="none" stroke="{color}" '
                f'stroke-width="1.6"/>'
            )
        if len(coords) <= 40:
            for x, y in coords:
                parts.append(
                    f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" '
                    f'fill="{color}"/>'
                )
        ly = _MT + 16 * i
        parts.append(
            f'<line x1="{_fmt(px1 + 10)}" y1="{_fmt(ly)}" '
            f'x2="{_fmt(px1 + 30)}" y2="{_fmt(ly)}" stroke="{color}" '
            f'stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_fmt(px1 + 36)}" y="{_fmt(ly + 4)}">'
            f"{_esc(name)}</text>"
        )

    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", "utf-8")


def _esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
    )
