"""Polygon-exact SVG plots of DoF regions."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .regions import DofRegion

SIZE = 480
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _unit_label(k: Fraction) -> str:
    if k == 0:
        return "0"
    num = "" if k.numerator == 1 else str(k.numerator)
    return f"{num}L" if k.denominator == 1 else f"{num}L/{k.denominator}"


def _ticks(span: float, unit: float | None) -> list[tuple[float, str]]:
    if unit:
        step = unit / 2
        count = int(span / step + 1e-9)
        return [(i * step, _unit_label(Fraction(i, 2))) for i in range(count + 1)]
    step = 1.0 if span <= 10 else float(round(span / 8))
    count = int(span / step + 1e-9)
    return [(i * step, _fmt(i * step)) for i in range(count + 1)]


class _Canvas:
    def __init__(self, span: float):
        self.span = span
        self.scale = (SIZE - 2 * MARGIN) / span
        self.parts: list[str] = []

    def px(self, d1: float, d2: float) -> tuple[float, float]:
        return MARGIN + d1 * self.scale, SIZE - MARGIN - d2 * self.scale

    def xy(self, d1: float, d2: float) -> str:
        x, y = self.px(d1, d2)
        return f"{_fmt(x)},{_fmt(y)}"

    def add(self, s: str) -> None:
        self.parts.append(s)


def _axes(c: _Canvas, unit: float | None) -> None:
    c.add(f'<polyline points="{c.xy(0, c.span)} {c.xy(0, 0)} {c.xy(c.span, 0)}" '
          'fill="none" stroke="black" stroke-width="1.5"/>')
    for value, label in _ticks(c.span, unit):
        x, y = c.px(value, 0)
        c.add(f'<text x="{_fmt(x)}" y="{_fmt(y + 18)}" font-size="12" text-anchor="middle">{label}</text>')
        x, y = c.px(0, value)
        c.add(f'<text x="{_fmt(x - 8)}" y="{_fmt(y + 4)}" font-size="12" text-anchor="end">{label}</text>')
    x, y = c.px(c.span / 2, 0)
    c.add(f'<text x="{_fmt(x)}" y="{_fmt(y + 40)}" font-size="14" text-anchor="middle">d₁</text>')
    x, y = c.px(0, c.span / 2)
    c.add(f'<text x="{_fmt(x - 40)}" y="{_fmt(y)}" font-size="14" text-anchor="middle">d₂</text>')


def _polygon(c: _Canvas, region: DofRegion, color: str, width: float = 2.0) -> None:
    pts = " ".join(c.xy(*v) for v in ((0.0, 0.0),) + tuple(region.vertices))
    c.add(f'<polygon points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')


def _span(regions: Sequence[DofRegion], unit: float | None) -> float:
    top = max([max(r.d1_max, r.d2_max) for r in regions] + [1e-9])
    if unit:
        halves = int(top / (unit / 2) + 1e-9) + 1
        return halves * unit / 2 if top > 0 else unit
    return float(int(top + 1e-9) + 1)


def _document(c: _Canvas) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
            f'viewBox="0 0 {SIZE} {SIZE}">')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *c.parts, "</svg>"]) + "\n"


def region_svg(region: DofRegion, unit: float | None = None, title: str = "") -> str:
    """Full-duplex region outline with the half-duplex time-sharing line dashed."""
    c = _Canvas(_span([region], unit))
    _axes(c, unit)
    _polygon(c, region, COLORS[0])
    c.add(f'<polyline points="{c.xy(region.d1_max, 0)} {c.xy(0, region.d2_max)}" '
          'fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="6,4"/>')
    c.add(f'<text x="{SIZE - MARGIN}" y="{MARGIN - 30}" font-size="12" text-anchor="end" fill="{COLORS[0]}">full duplex</text>')
    c.add(f'<text x="{SIZE - MARGIN}" y="{MARGIN - 14}" font-size="12" text-anchor="end">half duplex (dashed)</text>')
    if title:
        c.add(f'<text x="{SIZE // 2}" y="20" font-size="14" text-anchor="middle">{title}</text>')
    return _document(c)


def overlay_svg(curves: Sequence[tuple[str, DofRegion]], unit: float | None = None,
                title: str = "") -> str:
    """Several regions on shared axes; identical regions share one legend entry."""
    merged: list[tuple[list[str], DofRegion]] = []
    for label, region in curves:
        for labels, existing in merged:
            if existing.vertices == region.vertices:
                labels.append(label)
                break
        else:
            merged.append(([label], region))
    c = _Canvas(_span([r for _, r in curves], unit))
    _axes(c, unit)
    for i, (labels, region) in enumerate(merged):
        color = COLORS[i % len(COLORS)]
        _polygon(c, region, color)
        c.add(f'<text x="{SIZE - MARGIN}" y="{MARGIN - 34 + 14 * i}" font-size="12" '
              f'text-anchor="end" fill="{color}">{", ".join(labels)}</text>')
    if title:
        c.add(f'<text x="{MARGIN}" y="20" font-size="14">{title}</text>')
    return _document(c)
