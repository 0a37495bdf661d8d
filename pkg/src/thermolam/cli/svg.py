"""Deterministic SVG band diagrams.

Plots are emitted as plain geometry: every coordinate is rounded to two
decimals and every element is written in a fixed order, so the same input
gives byte-identical documents.  Changing anything visible bumps
``STYLE_VERSION``, which is embedded in each document.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

from ..spectrum import BandReport, SpectrumPoint

STYLE_VERSION = "thermolam-svg/1"


@dataclass(frozen=True)
class Style:
    width: int = 640
    height: int = 480
    margin_left: int = 72
    margin_right: int = 150
    margin_top: int = 36
    margin_bottom: int = 56
    font: str = "DejaVu Sans, Arial, sans-serif"
    font_size: int = 12
    marker: float = 1.6
    family_colors: tuple[tuple[str, str], ...] = (
        ("shear", "#1f77b4"),
        ("compressional", "#d62728"),
        ("thermal", "#ff7f0e"),
        ("diffusive", "#2ca02c"),
        ("mixed", "#7f7f7f"),
    )
    delta_opacity: tuple[float, float] = (0.35, 1.0)

    def color(self, family: str) -> str:
        return dict(self.family_colors).get(family, "#000000")


DEFAULT_STYLE = Style()


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions (1, 2, 5 times a power of ten) covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(1, target)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    out = []
    v = first
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    a = abs(v)
    if a >= 1e4 or a < 1e-2:
        m, e = f"{v:.1e}".split("e")
        return f"{m.rstrip('0').rstrip('.')}e{int(e)}"
    return f"{v:.4g}"


class _Canvas:
    def __init__(self, style: Style, title: str, xlabel: str, ylabel: str,
                 xr: tuple[float, float], yr: tuple[float, float]):
        self.s = style
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.pw = style.width - style.margin_left - style.margin_right
        self.ph = style.height - style.margin_top - style.margin_bottom
        self.body: list[str] = []
        self.legend: list[tuple[str, str, float]] = []

    def px(self, x: float) -> float:
        return self.s.margin_left + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y: float) -> float:
        return self.s.margin_top + self.ph - (y - self.y0) / (self.y1 - self.y0) * self.ph

    def inside(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def vline(self, x: float, dash: bool = True, color: str = "#555555") -> None:
        d = ' stroke-dasharray="4 3"' if dash else ""
        self.body.append(
            f'<line x1="{_f(self.px(x))}" y1="{_f(self.py(self.y0))}" x2="{_f(self.px(x))}" '
            f'y2="{_f(self.py(self.y1))}" stroke="{color}" stroke-width="1"{d}/>'
        )

    def markers(self, xy: Sequence[tuple[float, float]], color: str, opacity: float, label: str) -> None:
        r = self.s.marker
        parts = []
        for x, y in xy:
            if self.inside(x, y):
                parts.append(f"M{_f(self.px(x) - r)} {_f(self.py(y) - r)}h{_f(2 * r)}v{_f(2 * r)}h{_f(-2 * r)}z")
        if parts:
            self.body.append(
                f'<path d="{"".join(parts)}" fill="{color}" fill-opacity="{opacity:.2f}" stroke="none"/>'
            )
        self.legend.append((label, color, opacity))

    def polyline(self, xy: Sequence[tuple[float, float]], color: str, label: str, dash: bool = False) -> None:
        pts = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in xy if math.isfinite(x) and math.isfinite(y))
        d = ' stroke-dasharray="6 3"' if dash else ""
        if pts:
            self.body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{d}/>')
            for x, y in xy:
                if math.isfinite(x) and math.isfinite(y):
                    self.body.append(f'<circle cx="{_f(self.px(x))}" cy="{_f(self.py(y))}" r="2.5" fill="{color}"/>')
        self.legend.append((label, color, 1.0))

    def note(self, text: str) -> None:
        cx = self.s.margin_left + self.pw / 2
        cy = self.s.margin_top + self.ph / 2
        self.body.append(f'<text x="{_f(cx)}" y="{_f(cy)}" text-anchor="middle" fill="#888888">{escape(text)}</text>')

    def render(self) -> str:
        s = self.s
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{s.width}" height="{s.height}" '
            f'viewBox="0 0 {s.width} {s.height}" font-family="{escape(s.font)}" font-size="{s.font_size}">',
            f"<desc>{STYLE_VERSION}</desc>",
            f'<rect x="0" y="0" width="{s.width}" height="{s.height}" fill="#ffffff"/>',
        ]
        left, top = s.margin_left, s.margin_top
        out.append(f'<rect x="{left}" y="{top}" width="{self.pw}" height="{self.ph}" fill="none" stroke="#000000"/>')
        for t in nice_ticks(self.x0, self.x1):
            x = self.px(t)
            yb = top + self.ph
            out.append(f'<line x1="{_f(x)}" y1="{yb}" x2="{_f(x)}" y2="{yb + 5}" stroke="#000000"/>')
            out.append(f'<text x="{_f(x)}" y="{yb + 18}" text-anchor="middle">{_tick_label(t)}</text>')
        for t in nice_ticks(self.y0, self.y1):
            y = self.py(t)
            out.append(f'<line x1="{left - 5}" y1="{_f(y)}" x2="{left}" y2="{_f(y)}" stroke="#000000"/>')
            out.append(f'<text x="{left - 8}" y="{_f(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
        out.append(f'<text x="{_f(left + self.pw / 2)}" y="{s.height - 14}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(
            f'<text x="16" y="{_f(top + self.ph / 2)}" text-anchor="middle" '
            f'transform="rotate(-90 16 {_f(top + self.ph / 2)})">{escape(self.ylabel)}</text>'
        )
        out.append(f'<text x="{_f(left + self.pw / 2)}" y="{top - 12}" text-anchor="middle">{escape(self.title)}</text>')
        out.extend(self.body)
        lx = left + self.pw + 12
        for i, (label, color, op) in enumerate(self.legend):
            ly = top + 8 + 16 * i
            out.append(f'<rect x="{lx}" y="{ly - 8}" width="10" height="10" fill="{color}" fill-opacity="{op:.2f}"/>')
            out.append(f'<text x="{lx + 16}" y="{ly + 1}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _series(points: Sequence[SpectrumPoint]) -> list[tuple[float, str, list[SpectrumPoint]]]:
    keys: dict[tuple[float, str], list[SpectrumPoint]] = {}
    for p in points:
        keys.setdefault((p.delta, p.family_group), []).append(p)
    return [(d, f, keys[(d, f)]) for d, f in sorted(keys)]


def _opacity(style: Style, delta: float, deltas: Sequence[float]) -> float:
    lo, hi = style.delta_opacity
    if len(deltas) < 2:
        return hi
    t = (delta - min(deltas)) / (max(deltas) - min(deltas))
    return lo + t * (hi - lo)


def _omega_range(points: Sequence[SpectrumPoint]) -> tuple[float, float]:
    ws = [p.omega_star for p in points]
    return (min(ws), max(ws)) if ws else (0.0, 1.0)


def svg_k2r(points: Sequence[SpectrumPoint], style: Style = DEFAULT_STYLE, k2i_window: float = 1.0) -> str:
    """Real Bloch wavenumber against frequency, first Brillouin zone.

    Only points with ``|k2i*| <= k2i_window`` are drawn; the zone edges
    ``+-pi`` are dashed.
    """
    shown = [p for p in points if abs(p.k2i_star) <= k2i_window]
    c = _Canvas(style, f"k2r* - omega*  (|k2i*| <= {k2i_window:g})", "k2r* = k2r L", "omega*",
                (-math.pi * 1.05, math.pi * 1.05), _omega_range(points))
    c.vline(-math.pi)
    c.vline(math.pi)
    deltas = sorted({p.delta for p in points})
    if not shown:
        c.note("no points")
    for d, fam, ps in _series(shown):
        c.markers([(p.k2r_star, p.omega_star) for p in ps], style.color(fam), _opacity(style, d, deltas),
                  f"{fam} d={d:g}")
    return c.render()


def svg_k2i(points: Sequence[SpectrumPoint], style: Style = DEFAULT_STYLE) -> str:
    """Imaginary Bloch wavenumber against frequency."""
    ks = [p.k2i_star for p in points if math.isfinite(p.k2i_star)]
    xr = (min(ks), max(ks)) if ks else (-1.0, 1.0)
    c = _Canvas(style, "k2i* - omega*", "k2i* = k2i L", "omega*", xr, _omega_range(points))
    deltas = sorted({p.delta for p in points})
    if not points:
        c.note("no points")
    for d, fam, ps in _series(points):
        c.markers([(p.k2i_star, p.omega_star) for p in ps], style.color(fam), _opacity(style, d, deltas),
                  f"{fam} d={d:g}")
    return c.render()


def svg_bands_vs_delta(reports: Sequence[BandReport], family: str = "compressional",
                       style: Style = DEFAULT_STYLE) -> str:
    """First pass-band and band-gap widths of ``family`` against ``delta``."""
    rs = sorted((r for r in reports if r.family == family), key=lambda r: r.delta)
    rows = [(r.delta, r.first_pass_width, r.first_gap_width) for r in rs]
    ys = [v for _, a, b in rows for v in (a, b) if math.isfinite(v)]
    ds = [d for d, _, _ in rows]
    xr = (min(ds), max(ds)) if ds else (0.0, 1.0)
    if xr[1] <= xr[0]:
        xr = (xr[0] - 0.5, xr[0] + 0.5)
    yr = (0.0, max(ys) * 1.05) if ys and max(ys) > 0 else (0.0, 1.0)
    c = _Canvas(style, f"first {family} band widths vs coupling", "delta", "width*", xr, yr)
    if not rows:
        c.note("no points")
    c.polyline([(d, a) for d, a, _ in rows], style.color(family), "A*_p (pass)")
    c.polyline([(d, b) for d, _, b in rows], "#000000", "A*_b (gap)", dash=True)
    return c.render()


__all__ = ["STYLE_VERSION", "Style", "DEFAULT_STYLE", "svg_k2r", "svg_k2i", "svg_bands_vs_delta", "nice_ticks"]
