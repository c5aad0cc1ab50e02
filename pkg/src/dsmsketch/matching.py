"""Matching kernels: modified Hausdorff distance, shape contexts, oriented chamfer matching.

Oriented chamfer matching keeps one Euclidean distance transform per
orientation bin of the edge map.  A template point reads the transform of
its own orientation bin, so edges running in a different direction do not
attract it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from .core import ORIENTATION_CHORD, Stroke, centroid, interpolate, orientations_at, sample_strokes
from .errors import InvalidArgumentError

DEFAULT_CHANNELS = 8


def mhd(a, b) -> float:
    """Modified Hausdorff distance between two point sets.

    The larger of the two directed mean nearest-neighbour distances.
    """
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise InvalidArgumentError("mhd needs two non-empty point sets")
    d_ab = cKDTree(b).query(a)[0].mean()
    d_ba = cKDTree(a).query(b)[0].mean()
    return float(max(d_ab, d_ba))


# --------------------------------------------------------------------------
# shape context


@dataclass(frozen=True, eq=False)
class ShapeContextDescriptor:
    histograms: np.ndarray  # (n_points, radial_bins, angle_bins) counts
    sample_points: np.ndarray

    @property
    def geometry(self):
        return self.histograms.shape[1:]

    @property
    def n_points(self):
        return self.histograms.shape[0]

    def normalized(self) -> np.ndarray:
        n = self.histograms.reshape(self.n_points, -1).astype(float)
        return n / max(self.n_points - 1, 1)


def _as_strokes(s):
    if isinstance(s, Stroke):
        return [s]
    return list(s)


def arc_samples(strokes, n: int) -> np.ndarray:
    """``n`` points uniformly spaced over the concatenated arc length of ``strokes``."""
    strokes = _as_strokes(strokes)
    lengths = np.array([st.length for st in strokes])
    total = lengths.sum()
    if total <= 0:
        raise InvalidArgumentError("cannot sample a zero-length stroke")
    pos = np.linspace(0.0, total, n)
    starts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    which = np.clip(np.searchsorted(starts, pos, side="right") - 1, 0, len(strokes) - 1)
    out = np.empty((n, 2))
    for k, st in enumerate(strokes):
        m = which == k
        if m.any():
            out[m] = interpolate(st.points, pos[m] - starts[k])
    return out


def shape_context(s, n_samples: int = 30, radial_bins: int = 5, angle_bins: int = 12,
                  r_inner: float = 0.125, r_outer: float = 2.0) -> ShapeContextDescriptor:
    """Log-polar shape context over arc-length-uniform samples.

    Radii are divided by the mean pairwise distance.  Radii below
    ``r_inner`` fall into the first radial bin and radii beyond ``r_outer``
    into the last, so every histogram counts all other points.  Angles are
    measured in the canvas frame (no rotation normalization).
    """
    if n_samples < 2:
        raise InvalidArgumentError("n_samples must be >= 2")
    pts = arc_samples(s, n_samples)
    diff = pts[None, :, :] - pts[:, None, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    off = ~np.eye(n_samples, dtype=bool)
    mean = dist[off].mean()
    if mean <= 0:
        raise InvalidArgumentError("degenerate stroke: all samples coincide")
    r = np.round(dist / mean, 9)
    # rounding keeps bin decisions stable under translation round-off
    theta = np.mod(np.round(np.arctan2(diff[..., 1], diff[..., 0]), 9), 2 * np.pi)
    edges = np.logspace(math.log10(r_inner), math.log10(r_outer), radial_bins + 1)
    r_idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, radial_bins - 1)
    a_idx = np.minimum((theta / (2 * np.pi / angle_bins)).astype(int), angle_bins - 1)
    hist = np.zeros((n_samples, radial_bins, angle_bins), dtype=np.int64)
    rows = np.repeat(np.arange(n_samples), n_samples).reshape(n_samples, n_samples)
    np.add.at(hist, (rows[off], r_idx[off], a_idx[off]), 1)
    return ShapeContextDescriptor(hist, pts)


def chi2_costs(d1: ShapeContextDescriptor, d2: ShapeContextDescriptor) -> np.ndarray:
    h1 = d1.normalized()
    h2 = d2.normalized()
    num = (h1[:, None, :] - h2[None, :, :]) ** 2
    den = h1[:, None, :] + h2[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(den > 0, num / den, 0.0)
    return 0.5 * q.sum(axis=2)


def sc_cost(d1: ShapeContextDescriptor, d2: ShapeContextDescriptor) -> float:
    """Mean chi-square cost over the optimal one-to-one point assignment."""
    if d1.geometry != d2.geometry:
        raise InvalidArgumentError("descriptors have different bin geometry %s vs %s" % (d1.geometry, d2.geometry))
    c = chi2_costs(d1, d2)
    rows, cols = linear_sum_assignment(c)
    return float(c[rows, cols].mean())


def shape_cost_matrix(descriptors, map_fn=map) -> np.ndarray:
    """Symmetric matrix of pairwise ``sc_cost`` values (zero diagonal)."""
    n = len(descriptors)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    vals = list(map_fn(lambda p: sc_cost(descriptors[p[0]], descriptors[p[1]]), pairs))
    k = np.zeros((n, n))
    for (i, j), v in zip(pairs, vals):
        k[i, j] = k[j, i] = v
    return k


# --------------------------------------------------------------------------
# oriented distance fields


def orientation_channel(theta, n_channels: int) -> np.ndarray:
    """Bin index of undirected orientations; bins partition ``[0, pi)``.

    Bins are centred on multiples of ``pi / n_channels`` so that horizontal
    and vertical lines sit mid-bin; bin 0 wraps around ``0 == pi``.
    """
    width = np.pi / n_channels
    t = np.mod(np.asarray(theta, dtype=float) + width / 2, np.pi)
    return np.minimum((t / width).astype(int), n_channels - 1)


def to_pixel(v) -> np.ndarray:
    return np.floor(np.asarray(v, dtype=float) + 0.5).astype(np.int64)


def _edge_array(edges) -> np.ndarray:
    if isinstance(edges, np.ndarray):
        arr = np.asarray(edges, dtype=float)
    else:
        rows = []
        for e in edges:
            if len(e) == 2:
                (x, y), t = e
            else:
                x, y, t = e
            rows.append((x, y, t))
        arr = np.array(rows, dtype=float)
    return arr.reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class OrientedDistanceField:
    channels: np.ndarray  # (n_channels, height, width)
    edges: np.ndarray  # (N, 3): x, y, orientation

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def default_penalty(self) -> float:
        return self.diagonal / 4.0


def build_odf(edges, width: int, height: int, n_channels: int = DEFAULT_CHANNELS) -> OrientedDistanceField:
    """Per-orientation exact Euclidean distance transforms of an edge set.

    ``edges`` holds ``(x, y, orientation)`` rows (or ``((x, y), orientation)``
    pairs).  A channel without edge points is ``inf`` everywhere.
    """
    if n_channels < 1:
        raise InvalidArgumentError("n_channels must be >= 1")
    width, height = int(width), int(height)
    e = _edge_array(edges)
    px = to_pixel(e[:, :2]) if len(e) else np.zeros((0, 2), dtype=np.int64)
    if len(e) and (px[:, 0].min() < 0 or px[:, 1].min() < 0 or px[:, 0].max() >= width or px[:, 1].max() >= height):
        raise InvalidArgumentError("edge point outside the %dx%d raster" % (width, height))
    ch = orientation_channel(e[:, 2], n_channels) if len(e) else np.zeros(0, dtype=int)
    fields = np.full((n_channels, height, width), np.inf)
    for c in range(n_channels):
        sel = ch == c
        if not sel.any():
            continue
        free = np.ones((height, width), dtype=bool)
        free[px[sel, 1], px[sel, 0]] = False
        fields[c] = ndimage.distance_transform_edt(free)
    fields.setflags(write=False)
    e.setflags(write=False)
    return OrientedDistanceField(fields, e)


# --------------------------------------------------------------------------
# chamfer matching


@dataclass(frozen=True, eq=False)
class StrokeTemplate:
    """Sample points relative to an anchor, with their orientations."""

    offsets: np.ndarray  # (N, 2), point - anchor
    orientations: np.ndarray
    anchor: np.ndarray

    @classmethod
    def from_strokes(cls, strokes, spacing: float = 2.0, anchor=None) -> "StrokeTemplate":
        strokes = _as_strokes(strokes)
        anchor = centroid(strokes) if anchor is None else np.asarray(anchor, dtype=float)
        pts, ori = sample_strokes(strokes, spacing)
        return cls(pts - anchor, ori, anchor)

    def placed(self, location) -> np.ndarray:
        return self.offsets + np.asarray(location, dtype=float)


def as_template(t, spacing: float = 2.0) -> StrokeTemplate:
    if isinstance(t, StrokeTemplate):
        return t
    return StrokeTemplate.from_strokes(t, spacing)


def _placed_pixels(tpl: StrokeTemplate, location) -> np.ndarray:
    loc = np.asarray(location, dtype=float)
    base = np.floor(loc)
    # same integer decomposition as the vectorized scan for integral locations
    return to_pixel(tpl.offsets + (loc - base)) + base.astype(np.int64)


def chamfer_cost(template, location, odf: OrientedDistanceField, penalty: float | None = None) -> float:
    """Mean oriented distance of the template placed with its anchor at ``location``."""
    tpl = as_template(template)
    if penalty is None:
        penalty = odf.default_penalty
    px = _placed_pixels(tpl, location)
    ch = orientation_channel(tpl.orientations, odf.n_channels)
    inside = (px[:, 0] >= 0) & (px[:, 1] >= 0) & (px[:, 0] < odf.width) & (px[:, 1] < odf.height)
    vals = np.full(len(px), float(penalty))
    vals[inside] = odf.channels[ch[inside], px[inside, 1], px[inside, 0]]
    return float(vals.mean())


def clip_region(region, odf: OrientedDistanceField):
    x0, y0, x1, y1 = (int(math.floor(v)) if i < 2 else int(math.ceil(v)) for i, v in enumerate(region))
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, odf.width - 1), min(y1, odf.height - 1)
    if x0 > x1 or y0 > y1:
        return None
    return x0, y0, x1, y1


def chamfer_cost_map(template, odf: OrientedDistanceField, region, penalty: float | None = None):
    """Chamfer cost at every integer location of ``region`` (inclusive bounds).

    Returns ``(x0, y0, costs)`` with ``costs[y - y0, x - x0]``, or ``None`` when the
    region misses the raster.
    """
    tpl = as_template(template)
    if penalty is None:
        penalty = odf.default_penalty
    box = clip_region(region, odf)
    if box is None:
        return None
    x0, y0, x1, y1 = box
    nx, ny = x1 - x0 + 1, y1 - y0 + 1
    off = to_pixel(tpl.offsets)
    ch = orientation_channel(tpl.orientations, odf.n_channels)
    keys, counts = np.unique(np.column_stack([off, ch]), axis=0, return_counts=True)
    total = np.zeros((ny, nx))
    window = np.empty((ny, nx))
    for (dx, dy, c), cnt in zip(keys, counts):
        window.fill(penalty)
        sx0, sy0 = x0 + dx, y0 + dy
        ax0, ay0 = max(sx0, 0), max(sy0, 0)
        ax1, ay1 = min(sx0 + nx, odf.width), min(sy0 + ny, odf.height)
        if ax0 < ax1 and ay0 < ay1:
            window[ay0 - sy0:ay1 - sy0, ax0 - sx0:ax1 - sx0] = odf.channels[c, ay0:ay1, ax0:ax1]
        total += cnt * window
    return x0, y0, total / len(off)


def fdcm_candidates(template, odf: OrientedDistanceField, region, threshold: float,
                    penalty: float | None = None, limit: int | None = None) -> list:
    """All integer locations in ``region`` with chamfer cost <= ``threshold``.

    Sorted by ``(cost, y, x)``; ``limit`` keeps only the first entries.
    """
    res = chamfer_cost_map(template, odf, region, penalty)
    if res is None:
        return []
    x0, y0, costs = res
    ys, xs = np.nonzero(costs <= threshold)
    vals = costs[ys, xs]
    order = np.lexsort((xs, ys, vals))
    if limit is not None:
        order = order[:limit]
    return [((float(x0 + xs[i]), float(y0 + ys[i])), float(vals[i])) for i in order]


__all__ = [
    "mhd", "ShapeContextDescriptor", "shape_context", "sc_cost", "shape_cost_matrix",
    "OrientedDistanceField", "build_odf", "StrokeTemplate", "chamfer_cost", "chamfer_cost_map",
    "fdcm_candidates", "orientation_channel", "ORIENTATION_CHORD", "orientations_at",
]
