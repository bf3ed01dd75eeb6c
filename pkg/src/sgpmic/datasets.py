"""Dataset container, CSV ingestion and the synthetic spiral / arc data."""
import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass
class Dataset:
    y: np.ndarray
    labels: np.ndarray = None
    name: str = ""

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.ndim != 2 or self.y.shape[0] < 1:
            raise InputError("data must be a non-empty (N, P) matrix")
        if not np.all(np.isfinite(self.y)):
            raise InputError("data contains NaN or Inf")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (self.y.shape[0],):
                raise InputError("labels must have one entry per row")

    @property
    def n_classes(self):
        return 0 if self.labels is None else len(np.unique(self.labels))


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(path, labels=None, name=None):
    """Read a comma-separated numeric matrix.

    A first row containing any non-numeric field is treated as a header.
    ``labels`` selects the label column: ``"last"``, ``"first"``, an integer
    column index, or ``None`` for no labels.  Label values are kept as
    strings and mapped to integer codes in order of first appearance.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path} is empty")
    if not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError(f"{path}: ragged rows")
    if labels is None or labels == "none":
        label_col = None
    elif labels == "last":
        label_col = width - 1
    elif labels == "first":
        label_col = 0
    else:
        label_col = int(labels)
        if not -width <= label_col < width:
            raise InputError(f"label column {labels} out of range")
        label_col %= width
    cols = [j for j in range(width) if j != label_col]
    try:
        y = np.array([[float(r[j]) for j in cols] for r in rows])
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric data field ({exc})") from exc
    lab = None
    if label_col is not None:
        raw = [r[label_col].strip() for r in rows]
        codes = {}
        lab = np.array([codes.setdefault(v, len(codes)) for v in raw])
    return Dataset(y, lab, name or os.path.splitext(os.path.basename(path))[0])


def dataset_to_csv(ds):
    """Serialize with a header ``y1..yP[,label]``; '%.17g' keeps floats exact."""
    buf = io.StringIO()
    p = ds.y.shape[1]
    header = [f"y{j + 1}" for j in range(p)]
    if ds.labels is not None:
        header.append("label")
    buf.write(",".join(header) + "\n")
    for i, row in enumerate(ds.y):
        fields = [format(v, ".17g") for v in row]
        if ds.labels is not None:
            fields.append(str(ds.labels[i]))
        buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def save_csv(ds, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_to_csv(ds))


def synth_spiral3d(n=300, noise_sd=0.0, seed=None, n_segments=4):
    """Points (t cos t, t sin t, t) for t evenly spaced over [0, 4 pi].

    Labels split the parameter range into ``n_segments`` equal angular
    segments (half-turns by default).
    """
    if n < 1:
        raise InputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 4.0 * np.pi, n)
    y = np.column_stack([t * np.cos(t), t * np.sin(t), t])
    if noise_sd > 0:
        y = y + rng.normal(scale=noise_sd, size=y.shape)
    labels = np.minimum((t / (4.0 * np.pi) * n_segments).astype(int), n_segments - 1)
    return Dataset(y, labels, "spiral3d")


ARC_SPAN = (np.pi / 6.0, 5.0 * np.pi / 6.0)


def synth_circle_arcs(n_per_arc=30, seed=None, noise_sd=0.02):
    """Five unit-radius arcs in the plane, centred at (3k, 0), k = 0..4.

    Each arc covers 120 degrees; even-indexed arcs open downwards and
    odd-indexed arcs upwards, giving a wavy chain whose neighbouring arcs
    are about 1.6 apart at their closest endpoints.  Angles are drawn
    uniformly and radii jittered by ``noise_sd``.
    """
    if n_per_arc < 1:
        raise InputError("n_per_arc must be >= 1")
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for k in range(5):
        ang = np.sort(rng.uniform(*ARC_SPAN, size=n_per_arc))
        if k % 2:
            ang = -ang
        rad = 1.0 + noise_sd * rng.standard_normal(n_per_arc)
        pts.append(np.column_stack([3.0 * k + rad * np.cos(ang), rad * np.sin(ang)]))
        labels.append(np.full(n_per_arc, k))
    return Dataset(np.vstack(pts), np.concatenate(labels), "arcs")
