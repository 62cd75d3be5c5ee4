"""Minimal static SVG line charts.

Renders one ``<polyline>`` per data series on axes sized to the combined
data extent padded by 5%, with ticks, labels, and a small legend. Output is
plain SVG 1.1 markup built with :mod:`xml.etree.ElementTree`, so the files
are self-contained and diffable.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

__all__ = ["Series", "render_line_chart"]

_WIDTH = 640
_HEIGHT = 480
_MARGIN_LEFT = 70
_MARGIN_RIGHT = 24
_MARGIN_TOP = 42
_MARGIN_BOTTOM = 56
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
_PAD_FRACTION = 0.05


@dataclass(frozen=True)
class Series:
    """One plotted curve; ``dashed`` renders it with a dash pattern."""

    label: str
    x: tuple
    y: tuple
    dashed: bool = False


def _extent(values) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    span = hi - lo
    pad = _PAD_FRACTION * span if span > 0 else max(abs(hi), 1.0) * _PAD_FRACTION
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _fmt(value: float) -> str:
    return f"{value:.4g}"


def render_line_chart(series: list[Series], title: str, x_label: str,
                      y_label: str) -> str:
    """Return the SVG markup for the given series."""
    if not series:
        raise ValueError("at least one series is required")
    x_lo, x_hi = _extent([v for s in series for v in s.x])
    y_lo, y_hi = _extent([v for s in series for v in s.y])
    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(x: float) -> float:
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": str(_WIDTH), "height": str(_HEIGHT),
        "viewBox": f"0 0 {_WIDTH} {_HEIGHT}",
    })
    ET.SubElement(svg, "rect", {"x": "0", "y": "0", "width": str(_WIDTH),
                                "height": str(_HEIGHT), "fill": "white"})
    ET.SubElement(svg, "text", {
        "x": str(_WIDTH / 2), "y": str(_MARGIN_TOP - 16),
        "text-anchor": "middle", "font-size": "16",
        "font-family": "sans-serif"}).text = title

    axis_style = {"stroke": "#333333", "stroke-width": "1"}
    x_axis_y = _MARGIN_TOP + plot_h
    ET.SubElement(svg, "line", {"x1": str(_MARGIN_LEFT), "y1": str(x_axis_y),
                                "x2": str(_MARGIN_LEFT + plot_w),
                                "y2": str(x_axis_y), **axis_style})
    ET.SubElement(svg, "line", {"x1": str(_MARGIN_LEFT), "y1": str(_MARGIN_TOP),
                                "x2": str(_MARGIN_LEFT), "y2": str(x_axis_y),
                                **axis_style})

    for tick in _ticks(x_lo, x_hi):
        x = px(tick)
        ET.SubElement(svg, "line", {"x1": f"{x:.2f}", "y1": str(x_axis_y),
                                    "x2": f"{x:.2f}", "y2": str(x_axis_y + 5),
                                    **axis_style})
        ET.SubElement(svg, "text", {
            "x": f"{x:.2f}", "y": str(x_axis_y + 20), "text-anchor": "middle",
            "font-size": "11", "font-family": "sans-serif"}).text = _fmt(tick)
    for tick in _ticks(y_lo, y_hi):
        y = py(tick)
        ET.SubElement(svg, "line", {"x1": str(_MARGIN_LEFT - 5), "y1": f"{y:.2f}",
                                    "x2": str(_MARGIN_LEFT), "y2": f"{y:.2f}",
                                    **axis_style})
        ET.SubElement(svg, "text", {
            "x": str(_MARGIN_LEFT - 9), "y": f"{y + 4:.2f}",
            "text-anchor": "end", "font-size": "11",
            "font-family": "sans-serif"}).text = _fmt(tick)

    ET.SubElement(svg, "text", {
        "x": str(_MARGIN_LEFT + plot_w / 2), "y": str(_HEIGHT - 14),
        "text-anchor": "middle", "font-size": "13",
        "font-family": "sans-serif"}).text = x_label
    y_title = ET.SubElement(svg, "text", {
        "x": "18", "y": str(_MARGIN_TOP + plot_h / 2), "text-anchor": "middle",
        "font-size": "13", "font-family": "sans-serif",
        "transform": f"rotate(-90 18 {_MARGIN_TOP + plot_h / 2})"})
    y_title.text = y_label

    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.x, s.y))
        attrs = {"points": points, "fill": "none", "stroke": color,
                 "stroke-width": "1.5"}
        if s.dashed:
            attrs["stroke-dasharray"] = "6 4"
        ET.SubElement(svg, "polyline", attrs)

        legend_y = _MARGIN_TOP + 8 + 18 * i
        swatch = {"x1": str(_MARGIN_LEFT + plot_w - 150),
                  "y1": str(legend_y), "x2": str(_MARGIN_LEFT + plot_w - 120),
                  "y2": str(legend_y), "stroke": color, "stroke-width": "1.5"}
        if s.dashed:
            swatch["stroke-dasharray"] = "6 4"
        ET.SubElement(svg, "line", swatch)
        ET.SubElement(svg, "text", {
            "x": str(_MARGIN_LEFT + plot_w - 114), "y": str(legend_y + 4),
            "font-size": "11", "font-family": "sans-serif"}).text = s.label

    return ET.tostring(svg, encoding="unicode")
