"""Self-contained SVG histogram of a permutation distribution.

No plotting dependency: the file is written as plain SVG markup.  Bars use
Freedman-Diaconis widths, a matched-moment normal density is overlaid, and
a red vertical marker shows the observed statistic.
"""

from __future__ import annotations

import math

import numpy as np

_WIDTH, _HEIGHT = 640, 400
_ML, _MR, _MT, _MB = 60, 20, 20, 44


def _fd_bin_count(deltas: np.ndarray) -> int:
    lo, hi = float(deltas.min()), float(deltas.max())
    q75, q25 = np.percentile(deltas, [75, 25])
    iqr = float(q75 - q25)
    width = 2.0 * iqr * len(deltas) ** (-1.0 / 3.0)
    if width <= 0:
        return min(10, max(1, int(math.sqrt(len(deltas)))))
    return max(1, min(200, int(math.ceil((hi - lo) / width))))


def render_histogram(deltas, observed: float, path) -> None:
    """Write an SVG histogram of ``deltas`` with the observed value marked.

    Degenerate input (a single distinct value) renders as one bar with the
    marker and no density curve.  Empty input is an error.
    """
    deltas = np.asarray(deltas, dtype=np.float64).ravel()
    if deltas.size == 0:
        raise ValueError("cannot render a histogram of zero deltas")
    if not np.all(np.isfinite(deltas)) or not math.isfinite(observed):
        raise ValueError("histogram inputs must be finite")

    degenerate = np.unique(deltas).size < 2
    if degenerate:
        v = float(deltas[0])
        half = max(abs(v) * 0.05, 0.5)
        edges = np.array([v - half, v + half])
        density = np.array([1.0 / (edges[1] - edges[0])])
    else:
        density, edges = np.histogram(deltas, bins=_fd_bin_count(deltas), density=True)

    mean = float(deltas.mean())
    sd = float(deltas.std(ddof=1)) if deltas.size > 1 else 0.0

    x_lo = min(float(edges[0]), observed)
    x_hi = max(float(edges[-1]), observed)
    pad = 0.05 * (x_hi - x_lo) or 1.0
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_hi = float(density.max())
    if sd > 0:
        y_hi = max(y_hi, 1.0 / (sd * math.sqrt(2 * math.pi)))
    y_hi *= 1.08

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_WIDTH - _ML - _MR)

    def sy(y):
        return _HEIGHT - _MB - y / y_hi * (_HEIGHT - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    for i, d in enumerate(density):
        x0, x1 = sx(edges[i]), sx(edges[i + 1])
        y = sy(float(d))
        parts.append(
            f'<rect x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0, 1.0):.2f}" '
            f'height="{(_HEIGHT - _MB) - y:.2f}" fill="#9ecae1" stroke="#4292c6" '
            f'stroke-width="0.5"/>'
        )
    if sd > 0 and not degenerate:
        xs = np.linspace(x_lo, x_hi, 200)
        dens = np.exp(-0.5 * ((xs - mean) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        pts = " ".join(f"{sx(x):.2f},{sy(d):.2f}" for x, d in zip(xs, dens))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="#08306b" stroke-width="1.5"/>'
        )
    ox = sx(observed)
    parts.append(
        f'<line x1="{ox:.2f}" y1="{sy(0):.2f}" x2="{ox:.2f}" y2="{_MT}" '
        f'stroke="red" stroke-width="2"/>'
    )
    ax_y = _HEIGHT - _MB
    parts.append(
        f'<line x1="{_ML}" y1="{ax_y}" x2="{_WIDTH - _MR}" y2="{ax_y}" stroke="black"/>'
    )
    parts.append(f'<line x1="{_ML}" y1="{ax_y}" x2="{_ML}" y2="{_MT}" stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        parts.append(
            f'<text x="{sx(xv):.2f}" y="{ax_y + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{xv:.3g}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _WIDTH - _MR) / 2:.2f}" y="{_HEIGHT - 8}" font-size="12" '
        f'text-anchor="middle" font-family="sans-serif">MSE difference under reshuffling '
        f'(red = observed)</text>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
