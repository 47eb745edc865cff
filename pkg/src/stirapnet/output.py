"""Run artifacts: CSV tables, the run manifest and a small SVG line plot."""
from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import ConfigurationError


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path: Path, columns: dict[str, np.ndarray]) -> None:
    """Column dictionary as CSV; floats use the shortest round-trip repr."""
    names = list(columns)
    n = len(next(iter(columns.values())))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(columns[c][i]) for c in names])


def write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_wigner(path: Path, x: np.ndarray, y: np.ndarray, w: np.ndarray) -> None:
    """Row-major grid: one row per (Re alpha, Im alpha) point."""
    rows = [[x[k], y[i], w[i, k]] for i in range(y.size) for k in range(x.size)]
    write_rows(path, ["re_alpha", "im_alpha", "W"], rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_manifest(path: Path, config: dict, metrics: dict, wall_clock: float, version: str,
                   command: str) -> None:
    """Everything needed to rerun: feed the manifest back to the same command."""
    doc = {
        "manifest_version": 1,
        "software": {"name": "stirapnet", "version": version, "python": platform.python_version(),
                     "numpy": np.__version__},
        "command": command,
        "seed": config.get("seed", 0),
        "wall_clock_seconds": wall_clock,
        "metrics": metrics,
        "config": config,
    }
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n")


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def svg_line_plot(x: np.ndarray, series: dict[str, np.ndarray], title: str = "",
                  xlabel: str = "", ylabel: str = "", width: int = 720, height: int = 440) -> str:
    """Line plot with axes, ticks and a legend; at most eight series."""
    if len(series) > len(_PALETTE):
        raise ConfigurationError(f"at most {len(_PALETTE)} series per plot")
    left, right, top, bottom = 70, 170, 40, 55
    pw, ph = width - left - right, height - top - bottom
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    x0, x1 = float(x.min()), float(x.max())
    y0 = min(0.0, min(float(np.nanmin(v)) for v in ys))
    y1 = max(float(np.nanmax(v)) for v in ys)
    if y1 <= y0:
        y1 = y0 + 1.0
    if x1 <= x0:
        x1 = x0 + 1.0
    sx = lambda v: left + (v - x0) / (x1 - x0) * pw
    sy = lambda v: top + ph - (v - y0) / (y1 - y0) * ph
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{top + ph}" x2="{px:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        py = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{t:g}</text>')
    for (name, y), color in zip(series.items(), _PALETTE):
        y = np.asarray(y, dtype=float)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y) if math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
    for i, (name, color) in enumerate(zip(series, _PALETTE)):
        ly = top + 15 + 18 * i
        lx = left + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 4}">{escape(name)}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{top - 15}" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
