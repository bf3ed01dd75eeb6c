"""Static SVG scatter plots of 2-D embeddings, with no plotting dependency."""
import csv

import numpy as np

from .errors import InputError

WIDTH = HEIGHT = 480
PAD = 40
MARGIN = 0.05
RADIUS = 4.0
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")
SHAPES = ("circle", "square", "triangle", "diamond", "cross", "triangle-down")


def read_embedding(path):
    """Parse an embedding CSV into (X, clusters, labels or None)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise InputError(f"{path} has no data rows")
    header = [h.strip() for h in rows[0]]
    xcols = [i for i, h in enumerate(header) if h.startswith("x") and h[1:].isdigit()]
    if "cluster" not in header:
        raise InputError(f"{path} has no cluster column")
    ci = header.index("cluster")
    li = header.index("label") if "label" in header else None
    body = [r for r in rows[1:] if r]
    try:
        X = np.array([[float(r[i]) for i in xcols] for r in body]).reshape(len(body), len(xcols))
        clusters = np.array([int(r[ci]) for r in body])
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: malformed row ({exc})") from exc
    labels = None
    if li is not None:
        raw = [r[li].strip() if li < len(r) else "" for r in body]
        if any(raw):
            labels = np.array(raw)
    return X, clusters, labels


def _fmt(v):
    return f"{v:.2f}"


def _marker(shape, cx, cy, color):
    r = RADIUS
    common = f'class="marker" fill="{color}" stroke="#000" stroke-width="0.5"'
    if shape == "circle":
        return f'<circle {common} cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}"/>'
    if shape == "square":
        return (f'<rect {common} x="{_fmt(cx - r)}" y="{_fmt(cy - r)}" '
                f'width="{_fmt(2 * r)}" height="{_fmt(2 * r)}"/>')
    if shape == "triangle":
        pts = [(cx, cy - r), (cx + r, cy + r), (cx - r, cy + r)]
    elif shape == "triangle-down":
        pts = [(cx, cy + r), (cx + r, cy - r), (cx - r, cy - r)]
    elif shape == "diamond":
        pts = [(cx, cy - r), (cx + r, cy), (cx, cy + r), (cx - r, cy)]
    else:
        a, b = r, r / 3
        pts = [(cx - b, cy - a), (cx + b, cy - a), (cx + b, cy - b), (cx + a, cy - b),
               (cx + a, cy + b), (cx + b, cy + b), (cx + b, cy + a), (cx - b, cy + a),
               (cx - b, cy + b), (cx - a, cy + b), (cx - a, cy - b), (cx - b, cy - b)]
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
    return f'<polygon {common} points="{coords}"/>'


def _axis_range(v):
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    if span == 0:
        span = max(abs(lo), 1.0)
        lo, hi = lo - span / 2, hi + span / 2
    return lo - MARGIN * span, hi + MARGIN * span


def render_svg(X, clusters, labels=None, title=None):
    """Scatter plot: marker shape by label, fill colour by cluster."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2:
        raise InputError("plotting needs exactly two latent dimensions")
    clusters = np.asarray(clusters)
    x0, x1 = _axis_range(X[:, 0])
    y0, y1 = _axis_range(X[:, 1])
    inner_w, inner_h = WIDTH - 2 * PAD, HEIGHT - 2 * PAD
    px = PAD + (X[:, 0] - x0) / (x1 - x0) * inner_w
    py = HEIGHT - PAD - (X[:, 1] - y0) / (y1 - y0) * inner_h
    ucl = {c: i for i, c in enumerate(np.unique(clusters))}
    if labels is None:
        shape_of = {None: 0}
        lab = [None] * len(X)
    else:
        lab = list(np.asarray(labels))
        shape_of = {v: i for i, v in enumerate(sorted(set(lab), key=str))}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>',
        f'<rect x="{PAD}" y="{PAD}" width="{inner_w}" height="{inner_h}" fill="none" '
        f'stroke="#444"/>',
        f'<text x="{PAD}" y="{HEIGHT - 10}" font-size="11" font-family="sans-serif">'
        f'x1: [{x0:.3g}, {x1:.3g}]  x2: [{y0:.3g}, {y1:.3g}]</text>',
    ]
    if title:
        safe = (str(title).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
        out.append(f'<text x="{PAD}" y="24" font-size="14" font-family="sans-serif">'
                   f'{safe}</text>')
    for i in range(len(X)):
        shape = SHAPES[shape_of[lab[i]] % len(SHAPES)]
        color = PALETTE[ucl[clusters[i]] % len(PALETTE)]
        out.append(_marker(shape, px[i], py[i], color))
    out.append("</svg>")
    return "\n".join(out) + "\n"
