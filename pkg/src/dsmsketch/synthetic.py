"""Synthetic shapes, models and sketch corpora for demos and tests."""

from __future__ import annotations

import math

import numpy as np

from .core import Sketch, Stroke
from .edges import render_edges
from .model import DeformableStrokeModel, EdgeGaussian, Exemplar, ModelCluster
from .core import bounding_box, centroid


def circle(center, radius, n=48, start=0.0, stop=2 * math.pi):
    t = np.linspace(start, stop, n)
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def polygon(center, radius, sides, rotation=0.0, closed=True):
    t = rotation + np.arange(sides + (1 if closed else 0)) * 2 * math.pi / sides
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def zigzag(center, width, height, teeth=4):
    x = np.linspace(-width / 2, width / 2, 2 * teeth + 1)
    y = np.where(np.arange(len(x)) % 2 == 0, -height / 2, height / 2)
    return np.column_stack([center[0] + x, center[1] + y])


def wave(center, width, amplitude, periods=1.5, n=40):
    x = np.linspace(-width / 2, width / 2, n)
    y = amplitude * np.sin(2 * math.pi * periods * (x + width / 2) / width)
    return np.column_stack([center[0] + x, center[1] + y])


def _exemplar(points_list, source):
    strokes = [Stroke(str(k), k, p) for k, p in enumerate(points_list)]
    return Exemplar(strokes, centroid(strokes), source)


# Four parts, each with visually distinct alternatives of similar size.
PART_SHAPES = (
    (lambda c: [circle(c, 22)], lambda c: [polygon(c, 26, 4, math.pi / 4)], lambda c: [polygon(c, 26, 6)]),
    (lambda c: [polygon(c, 18, 3, -math.pi / 2)], lambda c: [zigzag(c, 40, 16)]),
    (lambda c: [wave(c, 44, 10)], lambda c: [circle(c, 16, 32, 0.0, math.pi)], lambda c: [polygon(c, 15, 5)]),
    (lambda c: [polygon(c, 14, 4)], lambda c: [zigzag(c, 30, 20, 3)]),
)

# Part anchors on a 240 x 240 canvas; tree edges (parent, child).
PART_ANCHORS = np.array([[120.0, 110.0], [60.0, 60.0], [185.0, 70.0], [120.0, 185.0]])
PART_EDGES = ((0, 1), (0, 2), (0, 3))


def synthetic_model(canvas=240.0, variance=4.0) -> DeformableStrokeModel:
    """A hand-built 4-part star model with integer mean offsets."""
    clusters = []
    for i, makers in enumerate(PART_SHAPES):
        ex = [_exemplar(m(PART_ANCHORS[i]), "part %d shape %d" % (i, a)) for a, m in enumerate(makers)]
        # anchors are re-set to the part anchor so offsets are exact integers
        ex = [Exemplar(e.strokes, PART_ANCHORS[i], e.source) for e in ex]
        boxes = np.array([bounding_box(e.strokes) for e in ex])
        clusters.append(ModelCluster(ex, boxes.mean(axis=0), sum(e.length for e in ex), len(ex)))
    offsets = [EdgeGaussian(PART_ANCHORS[i] - PART_ANCHORS[j], variance * np.eye(2)) for i, j in PART_EDGES]
    return DeformableStrokeModel(clusters, PART_EDGES, offsets, 0, canvas, canvas)


def random_instance(model: DeformableStrokeModel, rng, shift=20, jitter=1):
    """Random exemplar choices and integer locations near the mean layout.

    The root moves by up to ``shift`` px; each child then sits at its mean
    offset from its parent plus up to ``jitter`` px per axis.
    """
    n = model.n_clusters
    exemplars = [int(rng.integers(len(c.exemplars))) for c in model.clusters]
    loc = np.zeros((n, 2))
    r = model.root
    base = np.array([model.clusters[r].exemplars[0].anchor])[0]
    loc[r] = np.round(base) + rng.integers(-shift, shift + 1, size=2)
    tree = model.tree
    for j in tree.order[1:]:
        i = tree.parent[j]
        k, sign = model._edge_index[(i, j)]
        mean = sign * model.offsets[k].mean  # mean of l_i - l_j
        loc[j] = loc[i] - np.round(mean) + rng.integers(-jitter, jitter + 1, size=2)
    return exemplars, loc


def render_instance(model, exemplars, locations, width=None, height=None):
    width = int(round(model.canvas_width)) if width is None else width
    height = int(round(model.canvas_height)) if height is None else height
    strokes = []
    for i, a in enumerate(exemplars):
        strokes.extend(model.clusters[i].exemplars[a].placed(locations[i]))
    return render_edges(strokes, width, height)


# --------------------------------------------------------------------------
# training corpora


def _jitter_points(p, rng, amount):
    return p + rng.normal(0.0, amount, size=p.shape)


def three_part_sketch(rng, index=0, canvas=300.0, jitter=4.0, noise=0.3, split_extra=False):
    """A sketch with three well separated parts, each drawn with 2-3 consecutive strokes.

    Parts: a circle (two arcs), a square outline (two open polylines) and a
    wave (two halves).  ``split_extra`` breaks one random part stroke into two
    to simulate over-segmentation.
    """
    c_head = np.array([80.0, 80.0]) + rng.normal(0, jitter, 2)
    c_body = np.array([160.0, 190.0]) + rng.normal(0, jitter, 2)
    c_tail = np.array([240.0, 80.0]) + rng.normal(0, jitter, 2)
    parts = [
        [circle(c_head, 30, 30, 0.0, math.pi + 0.1), circle(c_head, 30, 30, math.pi, 2 * math.pi + 0.1)],
        [polygon(c_body, 40, 4, math.pi / 4, closed=False)[:3], polygon(c_body, 40, 4, math.pi / 4)[2:]],
        [wave(c_tail, 60, 12, n=30)[:16], wave(c_tail, 60, 12, n=30)[15:]],
    ]
    if split_extra:
        p = int(rng.integers(3))
        s = int(rng.integers(len(parts[p])))
        pts = parts[p][s]
        mid = len(pts) // 2
        parts[p] = parts[p][:s] + [pts[:mid + 1], pts[mid:]] + parts[p][s + 1:]
    order = rng.permutation(3)
    strokes = []
    for p in order:
        for pts in parts[p]:
            strokes.append(Stroke(str(len(strokes)), len(strokes), np.clip(_jitter_points(pts, rng, noise), 0, canvas)))
    return Sketch(canvas, canvas, tuple(strokes), name="sketch%02d" % index)


def three_part_corpus(n=10, seed=0, **kw):
    rng = np.random.default_rng(seed)
    return [three_part_sketch(rng, i, **kw) for i in range(n)]


def random_polyline(rng, length, start, n_segments=8, turn=0.6):
    """Random smooth-ish polyline of exactly ``length`` px."""
    seg = length / n_segments
    ang = rng.uniform(0, 2 * math.pi)
    pts = [np.asarray(start, dtype=float)]
    for _ in range(n_segments):
        ang += rng.uniform(-turn, turn)
        pts.append(pts[-1] + seg * np.array([math.cos(ang), math.sin(ang)]))
    return np.array(pts)


def long_tailed_corpus(n_sketches=20, seed=0, canvas=1111.0):
    """Sketches whose stroke lengths follow a log-normal distribution (most below 1000 px)."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n_sketches):
        n = int(rng.integers(5, 40))
        lengths = np.exp(rng.normal(math.log(400), 0.9, size=n))
        strokes = []
        for i, length in enumerate(lengths):
            p = random_polyline(rng, length, rng.uniform(0, canvas, 2))
            strokes.append(Stroke(str(i), i, p))
        out.append(Sketch(canvas, canvas, tuple(strokes), name="lt%02d" % k))
    return out
