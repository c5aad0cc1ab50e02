"""The deformable stroke model: part clusters, tree edges, Gaussian offsets.

Each edge ``(i, j)`` carries a Gaussian over the anchor offset
``l_i - l_j``.  Exemplars are stored in model-canvas coordinates together
with their anchor (arc-length centroid), so placing an exemplar at ``l``
means translating it by ``l - anchor``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import Stroke, dumps, points_to_list
from .errors import InvalidModelError
from .matching import StrokeTemplate

LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True, eq=False)
class Exemplar:
    strokes: tuple
    anchor: np.ndarray
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "strokes", tuple(self.strokes))
        a = np.array(self.anchor, dtype=float).reshape(2)
        a.setflags(write=False)
        object.__setattr__(self, "anchor", a)

    def placed(self, location) -> list:
        """The exemplar's strokes with the anchor moved to ``location``."""
        loc = np.asarray(location, dtype=float)
        return [s.with_points((s.points - self.anchor) + loc) for s in self.strokes]

    def template(self, spacing: float = 2.0) -> StrokeTemplate:
        return StrokeTemplate.from_strokes(self.strokes, spacing, anchor=self.anchor)

    @property
    def length(self) -> float:
        return float(sum(s.length for s in self.strokes))


@dataclass(frozen=True, eq=False)
class ModelCluster:
    exemplars: tuple
    bbox: np.ndarray  # mean member bounding box [x0, y0, x1, y1]
    total_length: float = 0.0
    n_members: int = 0

    def __post_init__(self):
        object.__setattr__(self, "exemplars", tuple(self.exemplars))
        b = np.array(self.bbox, dtype=float).reshape(4)
        b.setflags(write=False)
        object.__setattr__(self, "bbox", b)
        if not self.exemplars:
            raise InvalidModelError("a cluster needs at least one exemplar")


@dataclass(frozen=True, eq=False)
class EdgeGaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.array(self.mean, dtype=float).reshape(2)
        c = np.array(self.cov, dtype=float).reshape(2, 2)
        if not np.allclose(c, c.T, rtol=0, atol=1e-12 * max(1.0, np.abs(c).max())):
            raise InvalidModelError("offset covariance is not symmetric")
        if np.linalg.eigvalsh(c).min() <= 0:
            raise InvalidModelError("offset covariance is not positive definite")
        m.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", c)

    @cached_property
    def _precision(self):
        return np.linalg.inv(self.cov)

    @cached_property
    def log_norm(self) -> float:
        return 0.5 * (2 * LOG_2PI + math.log(np.linalg.det(self.cov)))

    def neg_log_density(self, d) -> np.ndarray:
        """``-log N(d | mean, cov)`` for offsets ``d`` of shape ``(..., 2)``."""
        r = np.asarray(d, dtype=float) - self.mean
        p = self._precision
        q = p[0, 0] * r[..., 0] ** 2 + 2 * p[0, 1] * r[..., 0] * r[..., 1] + p[1, 1] * r[..., 1] ** 2
        return 0.5 * q + self.log_norm


@dataclass(frozen=True)
class Tree:
    root: int
    parent: tuple  # parent[i], -1 for the root
    children: tuple  # tuple of tuples
    order: tuple  # breadth-first order from the root


def build_tree(n: int, edges, root: int) -> Tree:
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    parent = [-2] * n
    parent[root] = -1
    order = [root]
    k = 0
    while k < len(order):
        u = order[k]
        k += 1
        for v in sorted(adj[u]):
            if parent[v] == -2:
                parent[v] = u
                order.append(v)
    if len(order) != n:
        raise InvalidModelError("edges do not connect all clusters")
    children = [[] for _ in range(n)]
    for v in order[1:]:
        children[parent[v]].append(v)
    return Tree(root, tuple(parent), tuple(tuple(c) for c in children), tuple(order))


@dataclass(frozen=True, eq=False)
class DeformableStrokeModel:
    clusters: tuple
    edges: tuple
    offsets: tuple
    root: int
    canvas_width: float
    canvas_height: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        object.__setattr__(self, "edges", tuple((int(i), int(j)) for i, j in self.edges))
        object.__setattr__(self, "offsets", tuple(self.offsets))
        n = len(self.clusters)
        if n < 1:
            raise InvalidModelError("model has no clusters")
        if len(self.edges) != n - 1 or len(self.offsets) != n - 1:
            raise InvalidModelError("a tree over %d clusters needs %d edges and offsets" % (n, n - 1))
        if not 0 <= self.root < n:
            raise InvalidModelError("root index out of range")
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise InvalidModelError("invalid edge (%d, %d)" % (i, j))
        self.tree  # validates connectivity

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @cached_property
    def tree(self) -> Tree:
        return build_tree(self.n_clusters, self.edges, self.root)

    @cached_property
    def _edge_index(self) -> dict:
        out = {}
        for k, (i, j) in enumerate(self.edges):
            out[(i, j)] = (k, 1.0)
            out[(j, i)] = (k, -1.0)
        return out

    def deformation(self, parent: int, child: int, l_parent, l_child) -> np.ndarray:
        """Pairwise ``-log p`` matrix for parent locations ``(a, 2)`` and child locations ``(b, 2)``."""
        k, sign = self._edge_index[(parent, child)]
        lp = np.asarray(l_parent, dtype=float).reshape(-1, 2)
        lc = np.asarray(l_child, dtype=float).reshape(-1, 2)
        d = sign * (lp[:, None, :] - lc[None, :, :])
        return self.offsets[k].neg_log_density(d)

    def deformation_energy(self, locations) -> float:
        locations = np.asarray(locations, dtype=float)
        total = 0.0
        for (i, j), g in zip(self.edges, self.offsets):
            total += float(g.neg_log_density(locations[i] - locations[j]))
        return total

    @property
    def canvas_diagonal(self) -> float:
        return math.hypot(self.canvas_width, self.canvas_height)


# --------------------------------------------------------------------------
# JSON


def _stroke_list(strokes):
    return [points_to_list(s.points) for s in strokes]


def model_to_dict(m: DeformableStrokeModel) -> dict:
    return {
        "canvas": {"width": float(m.canvas_width), "height": float(m.canvas_height)},
        "root": m.root,
        "edges": [[i, j] for i, j in m.edges],
        "offsets": [
            {"mean": [float(v) for v in g.mean], "cov": [[float(v) for v in r] for r in g.cov]} for g in m.offsets
        ],
        "clusters": [
            {
                "bbox": [float(v) for v in c.bbox],
                "total_length": float(c.total_length),
                "n_members": int(c.n_members),
                "exemplars": [
                    {"anchor": [float(v) for v in e.anchor], "source": e.source, "strokes": _stroke_list(e.strokes)}
                    for e in c.exemplars
                ],
            }
            for c in m.clusters
        ],
        "meta": m.meta,
    }


def model_from_dict(d: dict) -> DeformableStrokeModel:
    try:
        clusters = []
        for ci, c in enumerate(d["clusters"]):
            exemplars = []
            for ei, e in enumerate(c["exemplars"]):
                strokes = [Stroke("%d.%d.%d" % (ci, ei, si), 0, pts) for si, pts in enumerate(e["strokes"])]
                exemplars.append(Exemplar(strokes, e["anchor"], e.get("source", "")))
            clusters.append(ModelCluster(exemplars, c["bbox"], c.get("total_length", 0.0), c.get("n_members", 0)))
        offsets = [EdgeGaussian(o["mean"], o["cov"]) for o in d["offsets"]]
        return DeformableStrokeModel(
            clusters, [tuple(e) for e in d["edges"]], offsets, int(d["root"]),
            float(d["canvas"]["width"]), float(d["canvas"]["height"]), dict(d.get("meta", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidModelError):
            raise
        raise InvalidModelError("malformed model JSON: %s" % exc) from exc


def save_model(m: DeformableStrokeModel, path) -> None:
    Path(path).write_text(dumps(model_to_dict(m)))


def load_model(path) -> DeformableStrokeModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
