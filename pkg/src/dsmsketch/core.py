"""Stroke and sketch types, elementary polyline geometry, JSON and SVG IO.

Coordinates are real-valued pixels with ``x`` to the right and ``y`` down.
A raster of width ``W`` has pixel centres at integer positions ``0..W-1``;
continuous points map to pixels by rounding half up (``floor(v + 0.5)``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError

# Half-width (arc length, px) of the chord used to estimate local direction.
ORIENTATION_CHORD = 2.0


def _as_points(points) -> np.ndarray:
    arr = np.array(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidArgumentError("points must be an (N, 2) array, got shape %s" % (arr.shape,))
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("points must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Stroke:
    """One pen-down to pen-up polyline.

    ``order`` is the drawing-order index; fragments produced by cutting keep
    the order of their parent stroke.
    """

    id: str
    order: int
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))
        object.__setattr__(self, "id", str(self.id))
        if len(self.points) < 2:
            raise InvalidArgumentError("stroke %r needs at least 2 points" % self.id)
        if int(self.order) != self.order or self.order < 0:
            raise InvalidArgumentError("stroke order must be a non-negative integer")
        object.__setattr__(self, "order", int(self.order))

    @property
    def length(self) -> float:
        return polyline_length(self.points)

    def with_points(self, points, id=None) -> "Stroke":
        return Stroke(self.id if id is None else id, self.order, points)

    def __repr__(self):
        return "Stroke(id=%r, order=%d, n_points=%d)" % (self.id, self.order, len(self.points))


@dataclass(frozen=True, eq=False)
class Sketch:
    """A canvas and its strokes in file order.

    ``mirrored`` marks a sketch drawn facing the opposite direction of the
    training pose; model learning flips such sketches before pooling.
    """

    canvas_width: float
    canvas_height: float
    strokes: tuple = field(default_factory=tuple)
    mirrored: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "strokes", tuple(self.strokes))
        if not (self.canvas_width > 0 and self.canvas_height > 0):
            raise InvalidArgumentError("canvas dimensions must be positive")

    @property
    def area(self) -> float:
        return float(self.canvas_width) * float(self.canvas_height)

    def __len__(self):
        return len(self.strokes)

    def stroke_lengths(self) -> np.ndarray:
        return np.array([s.length for s in self.strokes], dtype=float)

    def with_strokes(self, strokes) -> "Sketch":
        return replace(self, strokes=tuple(strokes))


# --------------------------------------------------------------------------
# polyline geometry


def cumulative_length(points: np.ndarray) -> np.ndarray:
    seg = np.hypot(*np.diff(points, axis=0).T)
    return np.concatenate([[0.0], np.cumsum(seg)])


def polyline_length(points) -> float:
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return 0.0
    return float(np.hypot(*np.diff(points, axis=0).T).sum())


def stroke_length(s) -> float:
    """Arc length of a stroke (sum of Euclidean segment lengths)."""
    if isinstance(s, Stroke):
        return s.length
    return polyline_length(s)


def interpolate(points: np.ndarray, positions) -> np.ndarray:
    """Points at the given arc-length positions along a polyline."""
    points = np.asarray(points, dtype=float)
    cum = cumulative_length(points)
    positions = np.clip(np.asarray(positions, dtype=float), 0.0, cum[-1])
    x = np.interp(positions, cum, points[:, 0])
    y = np.interp(positions, cum, points[:, 1])
    return np.column_stack([x, y])


def orientations_at(points: np.ndarray, positions, chord: float = ORIENTATION_CHORD) -> np.ndarray:
    """Undirected local direction in ``[0, pi)`` at arc-length positions.

    The direction is that of the chord between the points ``chord`` px
    before and after each position, clamped to the polyline ends.
    """
    points = np.asarray(points, dtype=float)
    total = polyline_length(points)
    positions = np.asarray(positions, dtype=float)
    a = interpolate(points, np.clip(positions - chord, 0.0, total))
    b = interpolate(points, np.clip(positions + chord, 0.0, total))
    d = b - a
    theta = np.arctan2(d[:, 1], d[:, 0])
    return np.mod(theta, np.pi) % np.pi


def sample_positions(length: float, spacing: float) -> np.ndarray:
    """Arc positions ``0, spacing, 2*spacing, ...`` plus the far endpoint."""
    if not spacing > 0:
        raise InvalidArgumentError("spacing must be positive")
    n = int(math.floor(length / spacing + 1e-9))
    pos = np.arange(n + 1, dtype=float) * spacing
    if length - pos[-1] > 1e-9 * max(1.0, length):
        pos = np.append(pos, length)
    else:
        pos[-1] = length
    if len(pos) < 2:
        pos = np.array([0.0, length])
    return pos


def sample_polyline(points, spacing: float, chord: float = ORIENTATION_CHORD):
    """Uniform samples and their orientations along one polyline."""
    points = np.asarray(points, dtype=float)
    pos = sample_positions(polyline_length(points), spacing)
    return interpolate(points, pos), orientations_at(points, pos, chord)


def sample_strokes(strokes: Iterable[Stroke], spacing: float):
    """Concatenated uniform samples ``(points, orientations)`` for strokes."""
    pts, ori = [], []
    for s in strokes:
        p, o = sample_polyline(s.points, spacing)
        pts.append(p)
        ori.append(o)
    if not pts:
        return np.zeros((0, 2)), np.zeros(0)
    return np.vstack(pts), np.concatenate(ori)


def resample_stroke(s: Stroke, spacing: float) -> Stroke:
    """Resample at uniform arc-length spacing, keeping both endpoints."""
    if not spacing > 0:
        raise InvalidArgumentError("spacing must be positive, got %r" % spacing)
    pos = sample_positions(s.length, spacing)
    pts = interpolate(s.points, pos)
    pts[0], pts[-1] = s.points[0], s.points[-1]
    return s.with_points(pts)


def _sub_polyline(points: np.ndarray, cum: np.ndarray, a: float, b: float) -> np.ndarray:
    inner = (cum > a) & (cum < b)
    ends = interpolate(points, [a, b])
    return np.vstack([ends[:1], points[inner], ends[1:]])


def cut_stroke(s: Stroke, max_len: float) -> list:
    """Split a stroke into ``ceil(length / max_len)`` equal arc-length pieces.

    Fragments keep the parent's order; ids get a ``.k`` suffix when the
    stroke is actually cut.
    """
    if not max_len > 0:
        raise InvalidArgumentError("max_len must be positive")
    total = s.length
    n = max(1, int(math.ceil(total / max_len - 1e-12)))
    if n == 1:
        return [s]
    cum = cumulative_length(s.points)
    bounds = np.linspace(0.0, total, n + 1)
    pieces = [_sub_polyline(s.points, cum, bounds[k], bounds[k + 1]) for k in range(n)]
    pieces[0][0], pieces[-1][-1] = s.points[0], s.points[-1]
    return [s.with_points(p, id="%s.%d" % (s.id, k)) for k, p in enumerate(pieces)]


def cut_sketch(k: Sketch, max_len: float) -> Sketch:
    out = []
    for s in k.strokes:
        out.extend(cut_stroke(s, max_len))
    return k.with_strokes(out)


def flip_horizontal(k: Sketch) -> Sketch:
    """Mirror about the vertical canvas axis: ``x -> width - x``."""
    w = float(k.canvas_width)
    strokes = [s.with_points(np.column_stack([w - s.points[:, 0], s.points[:, 1]])) for s in k.strokes]
    return replace(k, strokes=tuple(strokes), mirrored=not k.mirrored)


def centroid(strokes: Sequence[Stroke]) -> np.ndarray:
    """Arc-length weighted centroid of one or more polylines."""
    num = np.zeros(2)
    den = 0.0
    for s in strokes:
        p = s.points
        seg = np.hypot(*np.diff(p, axis=0).T)
        mid = 0.5 * (p[1:] + p[:-1])
        num += (seg[:, None] * mid).sum(axis=0)
        den += seg.sum()
    if den <= 0:
        return np.vstack([s.points for s in strokes]).mean(axis=0)
    return num / den


def bounding_box(strokes: Sequence[Stroke]) -> np.ndarray:
    """``[x0, y0, x1, y1]`` over all points."""
    p = np.vstack([s.points for s in strokes])
    return np.concatenate([p.min(axis=0), p.max(axis=0)])


def rotate_points(points: np.ndarray, angle: float, center) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    center = np.asarray(center, dtype=float)
    return (points - center) @ rot.T + center


def translate_strokes(strokes: Sequence[Stroke], offset) -> list:
    offset = np.asarray(offset, dtype=float)
    return [s.with_points(s.points + offset) for s in strokes]


# --------------------------------------------------------------------------
# JSON


def _num(v: float):
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2**53 else v


def points_to_list(points) -> list:
    return [[_num(x), _num(y)] for x, y in np.asarray(points)]


def sketch_to_dict(k: Sketch) -> dict:
    d = {
        "canvas": {"width": _num(k.canvas_width), "height": _num(k.canvas_height)},
        "strokes": [{"id": s.id, "order": s.order, "points": points_to_list(s.points)} for s in k.strokes],
    }
    if k.mirrored:
        d["mirrored"] = True
    return d


def sketch_from_dict(d: dict, name: str = "", clamp: bool = True, strict_order: bool = True) -> Sketch:
    """Build a sketch from the JSON object layout (unknown keys ignored).

    Points are clamped into the canvas.  With ``strict_order`` distinct
    order values are re-ranked to ``0..n-1`` and duplicates rejected.
    """
    try:
        w = float(d["canvas"]["width"])
        h = float(d["canvas"]["height"])
        raw = d["strokes"]
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError("sketch JSON needs canvas.width, canvas.height and strokes") from exc
    orders = [int(s.get("order", i)) for i, s in enumerate(raw)]
    if strict_order and raw:
        if len(set(orders)) != len(orders):
            raise InvalidArgumentError("stroke orders must be unique within a sketch")
        rank = {o: r for r, o in enumerate(sorted(orders))}
        orders = [rank[o] for o in orders]
    strokes = []
    for i, (s, order) in enumerate(zip(raw, orders)):
        pts = np.array(s["points"], dtype=float).reshape(-1, 2)
        if clamp:
            pts[:, 0] = np.clip(pts[:, 0], 0.0, w)
            pts[:, 1] = np.clip(pts[:, 1], 0.0, h)
        strokes.append(Stroke(s.get("id", str(i)), order, pts))
    return Sketch(w, h, tuple(strokes), mirrored=bool(d.get("mirrored", False)), name=name or d.get("name", ""))


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys are not used; layout is fixed)."""
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def save_sketch(k: Sketch, path) -> None:
    Path(path).write_text(dumps(sketch_to_dict(k)))


def load_sketch(path, **kwargs) -> Sketch:
    path = Path(path)
    with open(path) as fh:
        d = json.load(fh)
    return sketch_from_dict(d, name=kwargs.pop("name", path.stem), **kwargs)


def load_sketch_dir(path) -> list:
    """All ``*.json`` sketches in a directory, in file-name order."""
    files = sorted(Path(path).glob("*.json"))
    return [load_sketch(f) for f in files]


# --------------------------------------------------------------------------
# SVG

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _path_d(points) -> str:
    pts = np.asarray(points)
    head = "M %.3f %.3f" % tuple(pts[0])
    return head + "".join(" L %.3f %.3f" % tuple(p) for p in pts[1:])


def svg_document(width: float, height: float, body: Sequence[str]) -> str:
    head = (
        '<svg xmlns="http://www.w3.org/2000/svg" width="%s" height="%s" viewBox="0 0 %s %s">\n'
        % (_num(width), _num(height), _num(width), _num(height))
    )
    return head + '<rect width="100%" height="100%" fill="white"/>\n' + "".join(body) + "</svg>\n"


def svg_paths(strokes: Sequence[Stroke], colors=None, stroke_width: float = 2.0) -> list:
    out = []
    for i, s in enumerate(strokes):
        color = "black" if colors is None else colors[i]
        out.append(
            '<path d="%s" fill="none" stroke="%s" stroke-width="%s" '
            'stroke-linecap="round" stroke-linejoin="round"/>\n' % (_path_d(s.points), color, _num(stroke_width))
        )
    return out


def sketch_to_svg(k: Sketch, stroke_width: float = 2.0, colors=None) -> str:
    """One ``<path>`` per stroke with round caps."""
    return svg_document(k.canvas_width, k.canvas_height, svg_paths(k.strokes, colors, stroke_width))
