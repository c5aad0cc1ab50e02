"""Learning a deformable stroke model from grouped training sketches.

Semantic strokes from all sketches are pooled and clustered spectrally on
an affinity that mixes shape-context cost and location; the clusters
become model parts.  Parts are connected by a minimum spanning tree over
co-occurrence distances and each tree edge gets a Gaussian over the
anchor offset between its two parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Sketch, bounding_box, centroid, flip_horizontal, rotate_points
from .errors import InvalidArgumentError, InvalidModelError
from .grouping import group_strokes
from .matching import shape_context, shape_cost_matrix
from .model import DeformableStrokeModel, EdgeGaussian, Exemplar, ModelCluster

RIDGE = 1.0
DISTANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class LearningParams:
    exemplar_fraction: float = 0.25
    n_rotations: int = 2
    max_angle: float = 10.0  # degrees
    ridge: float = RIDGE
    n_neighbors: int = 7  # local-scale neighbour rank
    n_samples: int = 30
    radial_bins: int = 5
    angle_bins: int = 12
    n_clusters: int | None = None  # None: rounded mean group count


@dataclass(eq=False)
class SemanticItem:
    """One semantic stroke in the training pool."""

    sketch_index: int
    strokes: list
    location: np.ndarray
    bbox: np.ndarray
    length: float
    descriptor: object = None


@dataclass(eq=False)
class ClusterEntry:
    cluster_id: int
    members: list  # SemanticItem
    exemplars: list = field(default_factory=list)  # Exemplar

    @property
    def locations(self) -> np.ndarray:
        return np.array([m.location for m in self.members])

    @property
    def mean_bbox(self) -> np.ndarray:
        return np.mean([m.bbox for m in self.members], axis=0)

    @property
    def total_length(self) -> float:
        return float(sum(m.length for m in self.members))


# --------------------------------------------------------------------------
# affinities and spectral clustering


def affinity(k_cost: float, l_i, l_j, rho_i: float, rho_j: float) -> float:
    """``exp(-K * |l_i - l_j| / (rho_i * rho_j))``."""
    d = float(np.hypot(*(np.asarray(l_i, float) - np.asarray(l_j, float))))
    num = k_cost * d
    if num == 0:
        return 1.0
    return math.exp(-num / (rho_i * rho_j))


def local_scales(dissim: np.ndarray, n_neighbors: int = 7, floor: float = 1e-6) -> np.ndarray:
    """Square root of each item's dissimilarity to its ``n_neighbors``-th neighbour."""
    n = len(dissim)
    if n < 2:
        return np.ones(n)
    rank = min(n_neighbors, n - 1)
    srt = np.sort(dissim + np.diag(np.full(n, np.inf)), axis=1)
    return np.maximum(np.sqrt(srt[:, rank - 1]), floor)


def affinity_matrix(k_costs: np.ndarray, locations: np.ndarray, n_neighbors: int = 7) -> np.ndarray:
    dist = np.linalg.norm(locations[:, None, :] - locations[None, :, :], axis=2)
    dissim = k_costs * dist
    rho = local_scales(dissim, n_neighbors)
    with np.errstate(invalid="ignore"):
        a = np.exp(-dissim / np.outer(rho, rho))
    a[dissim == 0] = 1.0
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 1.0)
    return a


def _farthest_first(x: np.ndarray, k: int) -> list:
    d0 = np.linalg.norm(x - x.mean(axis=0), axis=1)
    centers = [int(np.argmax(d0))]
    dmin = np.linalg.norm(x - x[centers[0]], axis=1)
    while len(centers) < k:
        nxt = int(np.argmax(dmin))
        centers.append(nxt)
        dmin = np.minimum(dmin, np.linalg.norm(x - x[nxt], axis=1))
    return centers


def kmeans(x: np.ndarray, k: int, max_iter: int = 300) -> np.ndarray:
    """Lloyd iterations from farthest-first seeds; never returns an empty cluster."""
    n = len(x)
    centers = x[_farthest_first(x, k)].copy()
    labels = np.full(n, -1)
    for _ in range(max_iter):
        d = np.linalg.norm(x[:, None, :] - centers[None, :, :], axis=2)
        new = np.argmin(d, axis=1)
        for c in range(k):
            if not (new == c).any():
                # steal the point worst served by a cluster that can spare it
                sizes = np.bincount(new, minlength=k)
                spare = sizes[new] > 1
                cand = np.where(spare, d[np.arange(n), new], -np.inf)
                p = int(np.argmax(cand))
                new[p] = c
        if np.array_equal(new, labels):
            break
        labels = new
        centers = np.array([x[labels == c].mean(axis=0) for c in range(k)])
    return labels


def _canonical(labels: np.ndarray) -> np.ndarray:
    remap = {}
    for lab in labels:
        if lab not in remap:
            remap[lab] = len(remap)
    return np.array([remap[v] for v in labels])


def spectral_cluster(a: np.ndarray, k: int) -> np.ndarray:
    """Normalized spectral clustering of a symmetric affinity matrix.

    Embeds items with the top ``k`` eigenvectors of ``D^-1/2 A D^-1/2``,
    normalizes rows and runs deterministic k-means.  Cluster labels are
    numbered in order of each cluster's lowest item index.
    """
    a = np.asarray(a, dtype=float)
    n = len(a)
    if not 1 <= k <= n:
        raise InvalidArgumentError("need 1 <= k <= %d items, got k=%d" % (n, k))
    if not np.allclose(a, a.T):
        raise InvalidArgumentError("affinity matrix must be symmetric")
    if k == 1:
        return np.zeros(n, dtype=int)
    deg = a.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    m = inv[:, None] * a * inv[None, :]
    _, vecs = np.linalg.eigh(0.5 * (m + m.T))
    emb = vecs[:, -k:]
    # round-off from eigh would otherwise leak into k-means tie breaks
    emb = np.round(emb / np.maximum(np.linalg.norm(emb, axis=1, keepdims=True), 1e-300), 10)
    return _canonical(kmeans(emb, k))


def ncut_value(a: np.ndarray, labels) -> float:
    labels = np.asarray(labels)
    total = 0.0
    for c in np.unique(labels):
        inside = labels == c
        cut = a[np.ix_(inside, ~inside)].sum()
        vol = a[inside].sum()
        total += cut / vol if vol > 0 else 0.0
    return float(total)


# --------------------------------------------------------------------------
# exemplars


def rotation_angles(n_rotations: int, max_angle: float) -> np.ndarray:
    """Uniformly spaced angles in degrees over ``[-max_angle, +max_angle]``."""
    if n_rotations <= 0:
        return np.zeros(0)
    if n_rotations == 1:
        return np.array([-float(max_angle)])
    return np.linspace(-max_angle, max_angle, n_rotations)


def select_exemplars(members, fraction: float = 0.25, n_rotations: int = 2, max_angle: float = 10.0,
                     costs: np.ndarray | None = None) -> list:
    """Members with the lowest mean shape-context cost, plus rotated copies.

    ``members`` are ``SemanticItem``; ``costs`` is their pairwise
    shape-context cost matrix (computed when omitted).  Exemplars are
    ordered by ascending mean cost; each selected member is followed by its
    rotations about its centroid.
    """
    if not members:
        raise InvalidArgumentError("cannot select exemplars from an empty cluster")
    if not 0 < fraction <= 1:
        raise InvalidArgumentError("fraction must lie in (0, 1]")
    n = len(members)
    if costs is None:
        costs = shape_cost_matrix([m.descriptor for m in members])
    mean_cost = costs.sum(axis=1) / max(n - 1, 1)
    m = int(math.ceil(fraction * n - 1e-9))
    chosen = sorted(range(n), key=lambda i: (mean_cost[i], i))[:max(m, 1)]
    out = []
    for i in chosen:
        item = members[i]
        out.append(Exemplar(item.strokes, item.location, "sketch %d" % item.sketch_index))
        for deg in rotation_angles(n_rotations, max_angle):
            rad = math.radians(deg)
            rot = [s.with_points(rotate_points(s.points, rad, item.location)) for s in item.strokes]
            out.append(Exemplar(rot, item.location, "sketch %d rot %+g" % (item.sketch_index, deg)))
    return out


# --------------------------------------------------------------------------
# structure and offsets


class _DisjointSet:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[max(ri, rj)] = min(ri, rj)
        return True


def kruskal(weights: np.ndarray) -> list:
    """Minimum spanning tree edges ``(i, j)``, ``i < j``, of a complete graph.

    Edges are considered in ``(weight, i, j)`` order.
    """
    w = np.asarray(weights, dtype=float)
    n = len(w)
    cand = sorted((w[i, j], i, j) for i in range(n) for j in range(i + 1, n))
    ds = _DisjointSet(n)
    tree = []
    for _, i, j in cand:
        if ds.union(i, j):
            tree.append((i, j))
            if len(tree) == n - 1:
                break
    return tree


def same_sketch_offsets(ci: ClusterEntry, cj: ClusterEntry) -> np.ndarray:
    """Offsets ``l_i - l_j`` over all member pairs drawn from the same sketch."""
    out = []
    for a in ci.members:
        for b in cj.members:
            if a.sketch_index == b.sketch_index:
                out.append(a.location - b.location)
    return np.array(out).reshape(-1, 2)


def edge_log_weights(clusters, max_dim: float) -> np.ndarray:
    """``log w`` for every cluster pair; ``w`` multiplies normalized same-sketch distances.

    Pairs without same-sketch strokes get ``w = 1``.
    """
    n = len(clusters)
    lw = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            off = same_sketch_offsets(clusters[i], clusters[j])
            if len(off):
                d = np.maximum(np.linalg.norm(off, axis=1) / max_dim, DISTANCE_FLOOR)
                lw[i, j] = lw[j, i] = float(np.log(d).sum())
    return lw


def mst_structure(clusters, max_dim: float) -> list:
    if len(clusters) < 2:
        raise InvalidArgumentError("need at least 2 clusters for a tree structure")
    return kruskal(edge_log_weights(clusters, max_dim))


def fit_gaussian(offsets, ridge: float = RIDGE) -> EdgeGaussian:
    """Maximum-likelihood mean and covariance (divisor m) plus ``ridge * I``."""
    d = np.asarray(offsets, dtype=float).reshape(-1, 2)
    if len(d) == 0:
        raise InvalidModelError("no same-sketch stroke pairs on this edge")
    mu = d.mean(axis=0)
    r = d - mu
    cov = r.T @ r / len(d)
    cov = 0.5 * (cov + cov.T) + ridge * np.eye(2)
    return EdgeGaussian(mu, cov)


def fit_offsets(edges, clusters, ridge: float = RIDGE) -> list:
    out = []
    for i, j in edges:
        try:
            out.append(fit_gaussian(same_sketch_offsets(clusters[i], clusters[j]), ridge))
        except InvalidModelError as exc:
            raise InvalidModelError("edge (%d, %d): %s" % (i, j, exc)) from exc
    return out


# --------------------------------------------------------------------------
# pipeline


def pool_items(sketch_groups, params: LearningParams) -> list:
    items = []
    for si, (sketch, groups) in enumerate(sketch_groups):
        if sketch.mirrored:
            sketch = flip_horizontal(sketch)
        for strokes in group_strokes(sketch, groups):
            if sum(s.length for s in strokes) <= 0:
                continue
            items.append(SemanticItem(
                si, strokes, centroid(strokes), bounding_box(strokes), float(sum(s.length for s in strokes)),
                shape_context(strokes, params.n_samples, params.radial_bins, params.angle_bins),
            ))
    return items


def n_clusters_for(sketch_groups) -> int:
    mean = np.mean([len(g) for _, g in sketch_groups])
    return int(math.floor(mean + 0.5))


def learn_model(sketch_groups, params: LearningParams = LearningParams(), map_fn=map) -> DeformableStrokeModel:
    """Learn a model from ``(sketch, groups)`` pairs.

    Returns a model whose clusters are ordered by their first pooled member.
    """
    if len(sketch_groups) < 2:
        raise InvalidArgumentError("need at least 2 training sketches")
    items = pool_items(sketch_groups, params)
    k = params.n_clusters or n_clusters_for(sketch_groups)
    if k < 2:
        raise InvalidModelError("mean semantic-stroke count rounds to %d; need >= 2 clusters" % k)
    if k > len(items):
        raise InvalidModelError("only %d semantic strokes for %d clusters" % (len(items), k))
    costs = shape_cost_matrix([it.descriptor for it in items], map_fn)
    locations = np.array([it.location for it in items])
    a = affinity_matrix(costs, locations, params.n_neighbors)
    labels = spectral_cluster(a, k)

    clusters = []
    for c in range(k):
        idx = np.flatnonzero(labels == c)
        entry = ClusterEntry(c, [items[i] for i in idx])
        entry.exemplars = select_exemplars(entry.members, params.exemplar_fraction, params.n_rotations,
                                           params.max_angle, costs[np.ix_(idx, idx)])
        clusters.append(entry)

    width = float(np.mean([s.canvas_width for s, _ in sketch_groups]))
    height = float(np.mean([s.canvas_height for s, _ in sketch_groups]))
    edges = mst_structure(clusters, max(width, height))
    offsets = fit_offsets(edges, clusters, params.ridge)
    totals = [c.total_length for c in clusters]
    root = int(np.argmax(totals))
    model_clusters = [
        ModelCluster(c.exemplars, c.mean_bbox, c.total_length, len(c.members)) for c in clusters
    ]
    return DeformableStrokeModel(model_clusters, edges, offsets, root, width, height,
                                 {"n_training_sketches": len(sketch_groups)})


def cluster_montage_svg(model: DeformableStrokeModel, cell: float = 160.0, per_row: int = 6) -> str:
    """Exemplars of each cluster in a row, scaled into fixed-size cells."""
    from .core import PALETTE, svg_document, svg_paths

    body = []
    rows = 0
    for ci, c in enumerate(model.clusters):
        for ei, ex in enumerate(c.exemplars[:per_row]):
            pts = np.vstack([s.points for s in ex.strokes])
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            scale = 0.8 * cell / max(float((hi - lo).max()), 1e-9)
            ox = ei * cell + 0.1 * cell - lo[0] * scale
            oy = rows * cell + 0.1 * cell - lo[1] * scale
            strokes = [s.with_points(s.points * scale + [ox, oy]) for s in ex.strokes]
            body.extend(svg_paths(strokes, [PALETTE[ci % len(PALETTE)]] * len(strokes), 1.5))
        rows += 1
    return svg_document(per_row * cell, max(rows, 1) * cell, body)
