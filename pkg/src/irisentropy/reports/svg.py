"""Static SVG figures: score histograms with model curves, cohort overlays, QQ plots.

Output is deterministic (fixed element order, fixed number formatting, no
timestamps). Every plotted number comes from :func:`figure_table`, which
:func:`save_figure` also writes next to the SVG as CSV.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping
from xml.sax.saxutils import escape

import numpy as np

from ..errors import IncompatibleData
from ..stats.binomial import BinomialModel
from ..stats.extreme import ExtremeValueModel
from ..stats.histogram import DEFAULT_BIN_WIDTH, Histogram, build_histogram
from ..stats.quantiles import qq_map

KINDS = ("histogram_overlay", "histogram_compare", "ev_overlay", "qq")
_ROLES = {
    "histogram_overlay": ("scores", "model"),
    "histogram_compare": ("a", "b"),
    "ev_overlay": ("scores", "model"),
    "qq": ("a", "b"),
}
QQ_PROBABILITIES = np.linspace(0.001, 0.999, 999)

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 55
_COLOURS = ("#000000", "#cc0000")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: Mapping[str, str]
    title: str = ""
    xlabel: str = "Hamming distance"
    ylabel: str = "Count"
    output: str = ""
    bin_width: float = DEFAULT_BIN_WIDTH
    labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        missing = [r for r in _ROLES[self.kind] if r not in self.inputs]
        if missing:
            raise ValueError(f"{self.kind} figure needs inputs {missing}")


def _resolve(spec: FigureSpec, data: Mapping) -> dict:
    out = {}
    for role in _ROLES[spec.kind]:
        name = spec.inputs[role]
        if name not in data:
            raise IncompatibleData(f"input {role}={name!r} not found in data")
        out[role] = data[name]
    return out


def _as_hist(value, bin_width) -> Histogram:
    if isinstance(value, Histogram):
        return value
    arr = np.asarray(value, dtype=float)
    if arr.size == 0:
        raise IncompatibleData("empty score set")
    return build_histogram(arr, bin_width)


def _model_range(model, tail=1e-6) -> tuple[float, float]:
    lo = float(model.grid[np.searchsorted(model.cdf_grid, tail)])
    hi = float(model.grid[min(model.N, np.searchsorted(model.cdf_grid, 1 - tail))])
    return lo, hi


def _check_domain(hist: Histogram, model):
    occ = hist.occupied_range()
    lo, hi = _model_range(model)
    if occ is None or occ[1] < lo or occ[0] > hi:
        raise IncompatibleData(
            f"model mass lies in [{lo:.3f}, {hi:.3f}] but histogram occupies {occ}")


def _curve(model, hist: Histogram, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Model curve in expected counts per histogram bin."""
    scale = hist.total * hist.bin_width
    x = model.grid
    if kind == "ev_overlay":
        y = model.density_curve(x) * scale
    else:
        y = model.pmf * model.N * scale
    return x, y


def figure_table(spec: FigureSpec, data: Mapping) -> dict[str, list[tuple]]:
    """Named tables of the exact numbers a figure plots."""
    d = _resolve(spec, data)
    if spec.kind in ("histogram_overlay", "ev_overlay"):
        model = d["model"]
        if spec.kind == "ev_overlay" and not isinstance(model, ExtremeValueModel):
            raise IncompatibleData("ev_overlay needs an ExtremeValueModel")
        if spec.kind == "histogram_overlay" and not isinstance(model, BinomialModel):
            if not (isinstance(model, ExtremeValueModel) and model.k == 1):
                raise IncompatibleData("histogram_overlay needs a BinomialModel")
        hist = _as_hist(d["scores"], spec.bin_width)
        _check_domain(hist, model)
        cx, cy = _curve(model, hist, spec.kind)
        return {
            "bars": list(zip(hist.left_edges.tolist(), hist.counts.tolist())),
            "curve": list(zip(cx.tolist(), cy.tolist())),
        }
    if spec.kind == "histogram_compare":
        ha, hb = _as_hist(d["a"], spec.bin_width), _as_hist(d["b"], spec.bin_width)
        if ha.bin_width != hb.bin_width:
            raise IncompatibleData("histograms use different bin widths")
        return {
            "bars_a": list(zip(ha.left_edges.tolist(), ha.counts.tolist())),
            "bars_b": list(zip(hb.left_edges.tolist(), hb.counts.tolist())),
        }
    pairs = qq_map(d["a"], d["b"], QQ_PROBABILITIES)
    return {"qq": [tuple(row) for row in pairs.tolist()]}


class _Axes:
    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1 = x0, x1
        self.y0, self.y1 = y0, y1 if y1 > y0 else y0 + 1.0

    def px(self, x):
        return LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)

    def py(self, y):
        return HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)


def _f(v: float) -> str:
    return f"{v:.3f}"


def _ticks(lo, hi, n=5):
    step = (hi - lo) / n
    return [lo + i * step for i in range(n + 1)]


def _frame(ax: _Axes, spec: FigureSpec, y_fmt) -> list[str]:
    parts = [
        f'<rect x="{LEFT}" y="{TOP}" width="{WIDTH - LEFT - RIGHT}" '
        f'height="{HEIGHT - TOP - BOTTOM}" fill="none" stroke="#000000"/>'
    ]
    for t in _ticks(ax.x0, ax.x1):
        x = _f(ax.px(t))
        parts.append(f'<line x1="{x}" y1="{HEIGHT - BOTTOM}" x2="{x}" y2="{HEIGHT - BOTTOM + 5}" stroke="#000000"/>')
        parts.append(f'<text x="{x}" y="{HEIGHT - BOTTOM + 18}" text-anchor="middle">{t:.2f}</text>')
    for t in _ticks(ax.y0, ax.y1):
        y = _f(ax.py(t))
        parts.append(f'<line x1="{LEFT - 5}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="#000000"/>')
        parts.append(f'<text x="{LEFT - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{y_fmt(t)}</text>')
    parts.append(f'<text x="{WIDTH / 2:.1f}" y="{TOP - 15}" text-anchor="middle" font-size="15">{escape(spec.title)}</text>')
    parts.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(spec.xlabel)}</text>')
    parts.append(f'<text x="18" y="{HEIGHT / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {HEIGHT / 2:.1f})">{escape(spec.ylabel)}</text>')
    return parts


def _bars(ax: _Axes, bars, width, colour, opacity) -> list[str]:
    out = []
    base = ax.py(0.0)
    for left, count in bars:
        if count <= 0 or left + width < ax.x0 or left > ax.x1:
            continue
        x0, x1 = ax.px(max(left, ax.x0)), ax.px(min(left + width, ax.x1))
        top = ax.py(count)
        out.append(f'<rect x="{_f(x0)}" y="{_f(top)}" width="{_f(x1 - x0)}" height="{_f(base - top)}" '
                   f'fill="{colour}" fill-opacity="{opacity}"/>')
    return out


def _polyline(ax: _Axes, points, colour) -> str:
    coords = " ".join(f"{_f(ax.px(x))},{_f(ax.py(y))}" for x, y in points)
    return f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="2"/>'


def _legend(labels) -> list[str]:
    out = []
    for i, (label, colour) in enumerate(labels):
        y = TOP + 18 + 18 * i
        out.append(f'<rect x="{WIDTH - RIGHT - 150}" y="{y - 9}" width="12" height="12" fill="{colour}"/>')
        out.append(f'<text x="{WIDTH - RIGHT - 132}" y="{y + 1}">{escape(label)}</text>')
    return out


def _x_window(xs_with_mass) -> tuple[float, float]:
    lo = min(x for x, _ in xs_with_mass)
    hi = max(x for x, _ in xs_with_mass)
    lo = max(0.0, np.floor(lo * 20) / 20)
    hi = min(1.0, np.ceil(hi * 20) / 20)
    return (lo, hi) if hi > lo else (0.0, 1.0)


def render_figure(spec: FigureSpec, data: Mapping) -> str:
    """Render ``spec`` against resolved datasets and return the SVG document."""
    tables = figure_table(spec, data)
    body: list[str] = []
    if spec.kind == "qq":
        pts = tables["qq"]
        lo = min(min(a, b) for a, b in pts)
        hi = max(max(a, b) for a, b in pts)
        pad = 0.02 * (hi - lo or 1.0)
        ax = _Axes(lo - pad, hi + pad, lo - pad, hi + pad)
        body += _frame(ax, spec, lambda t: f"{t:.2f}")
        body.append(_polyline(ax, [(ax.x0, ax.y0), (ax.x1, ax.y1)], "#999999").replace(
            'stroke-width="2"', 'stroke-width="1" stroke-dasharray="4 3"'))
        body.append(_polyline(ax, pts, _COLOURS[1]))
    else:
        width = spec.bin_width
        if spec.kind == "histogram_compare":
            series = [tables["bars_a"], tables["bars_b"]]
            occupied = [(x, c) for s in series for x, c in s if c > 0]
            ymax = max(c for s in series for _, c in s)
        else:
            series = [tables["bars"]]
            occupied = [(x, c) for x, c in tables["bars"] if c > 0]
            occupied += [(x, y) for x, y in tables["curve"] if y >= 0.5]
            ymax = max(max(c for _, c in tables["bars"]), max(y for _, y in tables["curve"]))
        x0, x1 = _x_window(occupied)
        ax = _Axes(x0, x1, 0.0, ymax * 1.08)
        body += _frame(ax, spec, lambda t: f"{t:.0f}")
        if spec.kind == "histogram_compare":
            body += _bars(ax, series[0], width, _COLOURS[0], "0.55")
            body += _bars(ax, series[1], width, _COLOURS[1], "0.55")
            body += _legend([(spec.labels.get("a", spec.inputs["a"]), _COLOURS[0]),
                             (spec.labels.get("b", spec.inputs["b"]), _COLOURS[1])])
        else:
            body += _bars(ax, series[0], width, _COLOURS[0], "0.85")
            curve = [(x, y) for x, y in tables["curve"] if ax.x0 <= x <= ax.x1]
            body.append(_polyline(ax, curve, _COLOURS[1]))
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def save_figure(spec: FigureSpec, data: Mapping, output=None) -> Path:
    """Write the SVG plus a ``.csv`` holding every plotted number."""
    path = Path(output or spec.output)
    if not str(path):
        raise ValueError("no output path given")
    svg = render_figure(spec, data)
    path.write_text(svg)
    with open(path.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "x", "y"])
        for name, rows in figure_table(spec, data).items():
            for x, y in rows:
                w.writerow([name, repr(float(x)), repr(float(y))])
    return path
