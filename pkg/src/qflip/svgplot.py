"""Tiny dependency-free SVG charts for sweep results."""

from __future__ import annotations

import numpy as np

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _limits(values):
    lo = float(np.min(values))
    hi = float(np.max(values))
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def line_chart(x, series: dict, path, *, title: str = "", x_label: str = "",
               y_label: str = "", width: int = 640, height: int = 420) -> None:
    """Plot named y-series against a shared x axis."""
    x = np.asarray(x, dtype=np.float64)
    ml, mr, mt, mb = 60, 20, 30, 45
    pw, ph = width - ml - mr, height - mt - mb
    x0, x1 = _limits(x)
    y0, y1 = _limits(np.concatenate([np.asarray(v, dtype=np.float64)
                                     for v in series.values()]))
    sx = lambda v: ml + (v - x0) / (x1 - x0) * pw
    sy = lambda v: mt + ph - (v - y0) / (y1 - y0) * ph
    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
             'font-family="sans-serif" font-size="11">' % (width, height)]
    parts.append('<rect width="%d" height="%d" fill="white"/>' % (width, height))
    parts.append('<rect x="%d" y="%d" width="%d" height="%d" fill="none" '
                 'stroke="black"/>' % (ml, mt, pw, ph))
    if title:
        parts.append('<text x="%d" y="18" text-anchor="middle" font-size="13">%s'
                     '</text>' % (width // 2, title))
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        parts.append('<text x="%.1f" y="%d" text-anchor="middle">%.4g</text>'
                     % (sx(xv), height - mb + 15, xv))
        parts.append('<text x="%d" y="%.1f" text-anchor="end">%.4g</text>'
                     % (ml - 5, sy(yv) + 4, yv))
    if x_label:
        parts.append('<text x="%d" y="%d" text-anchor="middle">%s</text>'
                     % (ml + pw // 2, height - 8, x_label))
    if y_label:
        parts.append('<text x="14" y="%d" text-anchor="middle" '
                     'transform="rotate(-90 14 %d)">%s</text>'
                     % (mt + ph // 2, mt + ph // 2, y_label))
    for k, (label, ys) in enumerate(series.items()):
        ys = np.asarray(ys, dtype=np.float64)
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join("%.2f,%.2f" % (sx(a), sy(b)) for a, b in zip(x, ys))
        parts.append('<polyline points="%s" fill="none" stroke="%s" '
                     'stroke-width="1.5"/>' % (pts, color))
        parts.append('<text x="%d" y="%d" fill="%s">%s</text>'
                     % (ml + 8, mt + 16 + 14 * k, color, label))
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def _ramp_color(f: float) -> str:
    # dark blue -> white -> dark red
    f = min(max(f, 0.0), 1.0)
    if f < 0.5:
        t = f / 0.5
        r, g, b = 30 + t * 225, 60 + t * 195, 150 + t * 105
    else:
        t = (f - 0.5) / 0.5
        r, g, b = 255 - t * 60, 255 - t * 215, 255 - t * 225
    return "#%02x%02x%02x" % (int(r), int(g), int(b))


def heatmap(x, y, z, path, *, title: str = "", x_label: str = "",
            y_label: str = "", width: int = 560, height: int = 480) -> None:
    """Plot z[i, j] over (x[i], y[j]) cells with a diverging color ramp."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (len(x), len(y)):
        raise ValueError("z must have shape (len(x), len(y))")
    ml, mr, mt, mb = 60, 20, 30, 45
    pw, ph = width - ml - mr, height - mt - mb
    z0, z1 = _limits(z)
    cw, ch = pw / len(x), ph / len(y)
    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
             'font-family="sans-serif" font-size="11">' % (width, height)]
    parts.append('<rect width="%d" height="%d" fill="white"/>' % (width, height))
    if title:
        parts.append('<text x="%d" y="18" text-anchor="middle" font-size="13">%s'
                     '</text>' % (width // 2, title))
    for i in range(len(x)):
        for j in range(len(y)):
            f = (z[i, j] - z0) / (z1 - z0)
            parts.append('<rect x="%.2f" y="%.2f" width="%.2f" height="%.2f" '
                         'fill="%s"/>' % (ml + i * cw, mt + ph - (j + 1) * ch,
                                          cw + 0.5, ch + 0.5, _ramp_color(f)))
    parts.append('<rect x="%d" y="%d" width="%d" height="%d" fill="none" '
                 'stroke="black"/>' % (ml, mt, pw, ph))
    parts.append('<text x="%d" y="%d" text-anchor="middle">%.4g</text>'
                 % (ml, height - mb + 15, x[0]))
    parts.append('<text x="%d" y="%d" text-anchor="middle">%.4g</text>'
                 % (ml + pw, height - mb + 15, x[-1]))
    parts.append('<text x="%d" y="%d" text-anchor="end">%.4g</text>'
                 % (ml - 5, mt + ph, y[0]))
    parts.append('<text x="%d" y="%d" text-anchor="end">%.4g</text>'
                 % (ml - 5, mt + 10, y[-1]))
    if x_label:
        parts.append('<text x="%d" y="%d" text-anchor="middle">%s</text>'
                     % (ml + pw // 2, height - 8, x_label))
    if y_label:
        parts.append('<text x="14" y="%d" text-anchor="middle" '
                     'transform="rotate(-90 14 %d)">%s</text>'
                     % (mt + ph // 2, mt + ph // 2, y_label))
    parts.append('<text x="%d" y="%d">range [%.3g, %.3g]</text>'
                 % (ml + 8, mt + ph + 30, z0, z1))
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
