"""Fitting a deformable stroke model to an edge map.

Detection runs in three stages:

1. per-cluster candidate placements from oriented chamfer matching,
   ranked by sum-product message passing over the tree to pick the ``f``
   best root hypotheses and their most probable children;
2. min-sum dynamic programming over fresh, more permissive candidate
   lists that trades chamfer cost against deformation cost;
3. an optional deformation-only pass over small shifts.

Probabilities stay in the log domain throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.spatial import cKDTree

from .core import Sketch, interpolate, sample_positions, sample_strokes
from .errors import DetectionInfeasibleError
from .matching import OrientedDistanceField, chamfer_cost, fdcm_candidates, mhd
from .model import DeformableStrokeModel

TIE_TOL = 1e-9


@dataclass(frozen=True)
class InferenceParams:
    n_channels: int = 8
    template_spacing: float = 2.0
    sample_threshold: float = 3.0
    relaxed_threshold: float = 6.0
    margin: float = 0.25
    n_configurations: int = 10
    shift_radius: int = 5
    max_candidates: int = 50  # per exemplar, sampling stage
    max_relaxed_candidates: int = 200  # per exemplar, energy minimization
    penalty: float | None = None  # out-of-raster lookup; None: raster diagonal / 4
    refine: bool = True
    refine_each: bool = False
    overlap_radius: float = 3.0
    cut_fraction: float = 0.2


@dataclass(frozen=True, eq=False)
class ClusterCandidates:
    exemplars: np.ndarray  # (k,) exemplar index within the cluster
    locations: np.ndarray  # (k, 2)
    costs: np.ndarray  # (k,) chamfer cost

    def __len__(self):
        return len(self.costs)

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, dtype=int), np.zeros((0, 2)), np.zeros(0))


@dataclass(frozen=True, eq=False)
class Configuration:
    exemplars: tuple
    locations: np.ndarray  # (n, 2)
    chamfer: np.ndarray  # (n,)
    energy: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "energy": float(self.energy),
            "clusters": [
                {"cluster": i, "exemplar": int(e), "location": [float(v) for v in self.locations[i]],
                 "chamfer": float(self.chamfer[i])}
                for i, e in enumerate(self.exemplars)
            ],
        }


def configuration_energy(model: DeformableStrokeModel, locations, chamfer) -> float:
    return float(np.sum(chamfer)) + model.deformation_energy(locations)


def make_configuration(model, exemplars, locations, chamfer, **meta) -> Configuration:
    locations = np.asarray(locations, dtype=float).reshape(-1, 2)
    chamfer = np.asarray(chamfer, dtype=float)
    return Configuration(tuple(int(e) for e in exemplars), locations, chamfer,
                         configuration_energy(model, locations, chamfer), meta)


def _first_min(v: np.ndarray) -> int:
    m = v.min()
    return int(np.flatnonzero(v <= m + TIE_TOL * max(1.0, abs(m)))[0])


def _first_max(v: np.ndarray) -> int:
    return _first_min(-v)


# --------------------------------------------------------------------------
# candidate sampling


def sampling_region(model: DeformableStrokeModel, cluster: int, width: int, height: int, margin: float):
    """Anchor search rectangle: the cluster's mean box grown by ``margin`` canvas diagonals."""
    x0, y0, x1, y1 = model.clusters[cluster].bbox
    pad = margin * model.canvas_diagonal
    sx = width / model.canvas_width
    sy = height / model.canvas_height
    return ((x0 - pad) * sx, (y0 - pad) * sy, (x1 + pad) * sx, (y1 + pad) * sy)


def exemplar_templates(model: DeformableStrokeModel, spacing: float) -> list:
    return [[e.template(spacing) for e in c.exemplars] for c in model.clusters]


def sample_candidates(model: DeformableStrokeModel, odf: OrientedDistanceField,
                      params: InferenceParams = InferenceParams(), templates=None) -> list:
    """Candidate placements ``H(v_i)`` for every cluster."""
    templates = templates or exemplar_templates(model, params.template_spacing)
    out = []
    for i in range(model.n_clusters):
        region = sampling_region(model, i, odf.width, odf.height, params.margin)
        ex, loc, cost = [], [], []
        for a, tpl in enumerate(templates[i]):
            for l, c in fdcm_candidates(tpl, odf, region, params.sample_threshold, params.penalty,
                                        params.max_candidates):
                ex.append(a)
                loc.append(l)
                cost.append(c)
        if ex:
            out.append(ClusterCandidates(np.array(ex), np.array(loc, dtype=float), np.array(cost)))
        else:
            out.append(ClusterCandidates.empty())
    return out


def _check_feasible(candidates):
    empty = [i for i, c in enumerate(candidates) if len(c) == 0]
    if empty:
        raise DetectionInfeasibleError(empty)


# --------------------------------------------------------------------------
# tree dynamic programming


def tree_log_messages(model: DeformableStrokeModel, locations, log_unary):
    """Sum-product messages in the log domain.

    Returns ``(inner, root_marginal)`` where ``inner[j]`` is node ``j``'s
    unnormalized log belief from its own subtree (unary plus incoming
    messages) for each of its candidates; ``root_marginal`` equals
    ``inner[root]``.
    """
    tree = model.tree
    inner = [np.array(u, dtype=float) for u in log_unary]
    for j in reversed(tree.order[1:]):
        i = tree.parent[j]
        pair = -model.deformation(i, j, locations[i], locations[j])  # (h_i, h_j)
        inner[i] = inner[i] + logsumexp(pair + inner[j][None, :], axis=1)
    return inner, inner[tree.root]


def tree_top_down_max(model, locations, inner, root_choice: int) -> list:
    """Most probable child candidates given a fixed root candidate."""
    tree = model.tree
    choice = [0] * model.n_clusters
    choice[tree.root] = root_choice
    for j in tree.order[1:]:
        i = tree.parent[j]
        pair = -model.deformation(i, j, locations[i][choice[i]], locations[j])[0]
        choice[j] = _first_max(pair + inner[j])
    return choice


def tree_min_sum(model: DeformableStrokeModel, locations, unary):
    """Exact minimizer of ``sum unary + sum deformation`` over per-node candidates.

    Returns ``(choice, energy)`` with ``choice[i]`` indexing ``locations[i]``.
    """
    tree = model.tree
    q = [np.array(u, dtype=float) for u in unary]
    best_child = {}
    for j in reversed(tree.order[1:]):
        i = tree.parent[j]
        tot = model.deformation(i, j, locations[i], locations[j]) + q[j][None, :]
        arg = np.array([_first_min(row) for row in tot])
        best_child[j] = arg
        q[i] = q[i] + tot[np.arange(len(tot)), arg]
    choice = [0] * model.n_clusters
    r = tree.root
    choice[r] = _first_min(q[r])
    for j in tree.order[1:]:
        choice[j] = int(best_child[j][choice[tree.parent[j]]])
    return choice, float(q[r][choice[r]])


# --------------------------------------------------------------------------
# the three stages


def sample_configurations(model: DeformableStrokeModel, candidates, f: int = 10) -> list:
    """The ``f`` configurations led by the most probable root candidates."""
    _check_feasible(candidates)
    locs = [c.locations for c in candidates]
    inner, marg = tree_log_messages(model, locs, [-c.costs for c in candidates])
    order = np.lexsort((np.arange(len(marg)), -marg))[:max(int(f), 1)]
    out = []
    for rank, rc in enumerate(order):
        choice = tree_top_down_max(model, locs, inner, int(rc))
        exemplars = [candidates[i].exemplars[choice[i]] for i in range(model.n_clusters)]
        loc = [candidates[i].locations[choice[i]] for i in range(model.n_clusters)]
        cost = [candidates[i].costs[choice[i]] for i in range(model.n_clusters)]
        out.append(make_configuration(model, exemplars, loc, cost, rank=rank,
                                      root_log_marginal=float(marg[rc])))
    return out


def relaxed_candidates(model, config: Configuration, odf, params: InferenceParams, templates=None) -> list:
    """Fresh location lists for the configuration's exemplars, always including the current location."""
    templates = templates or exemplar_templates(model, params.template_spacing)
    penalty = params.penalty
    out = []
    for i, a in enumerate(config.exemplars):
        tpl = templates[i][a]
        region = sampling_region(model, i, odf.width, odf.height, params.margin)
        found = fdcm_candidates(tpl, odf, region, params.relaxed_threshold, penalty, params.max_relaxed_candidates)
        loc = [l for l, _ in found]
        cost = [c for _, c in found]
        cur = tuple(float(v) for v in config.locations[i])
        if cur not in loc:
            loc.append(cur)
            cost.append(chamfer_cost(tpl, cur, odf, penalty))
        out.append(ClusterCandidates(np.full(len(loc), a), np.array(loc, dtype=float), np.array(cost)))
    return out


def minimize_over(model, candidates) -> Configuration:
    """Min-sum optimum over fixed per-cluster candidate lists."""
    _check_feasible(candidates)
    choice, _ = tree_min_sum(model, [c.locations for c in candidates], [c.costs for c in candidates])
    n = model.n_clusters
    return make_configuration(
        model,
        [candidates[i].exemplars[choice[i]] for i in range(n)],
        [candidates[i].locations[choice[i]] for i in range(n)],
        [candidates[i].costs[choice[i]] for i in range(n)],
    )


def minimize_energy(model, config: Configuration, odf, params: InferenceParams = InferenceParams(),
                    templates=None) -> Configuration:
    """Re-place the configuration's exemplars to minimize chamfer plus deformation energy."""
    out = minimize_over(model, relaxed_candidates(model, config, odf, params, templates))
    out.meta.update(config.meta)
    return out


def shift_grid(radius: int) -> np.ndarray:
    """Integer offsets in ``[-r, r]^2``, smallest shifts first."""
    r = int(radius)
    g = np.array([(dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1)], dtype=float)
    key = np.lexsort((g[:, 0], g[:, 1], (g ** 2).sum(axis=1)))
    return g[key]


def refine_aesthetic(model, config: Configuration, shift_radius: int = 5, odf=None,
                     params: InferenceParams = InferenceParams(), templates=None) -> Configuration:
    """Deformation-only re-minimization over small integer shifts.

    With ``odf`` the chamfer costs are re-evaluated at the new locations;
    otherwise they are carried over unchanged.
    """
    grid = shift_grid(shift_radius)
    locs = [config.locations[i] + grid for i in range(model.n_clusters)]
    choice, _ = tree_min_sum(model, locs, [np.zeros(len(grid))] * model.n_clusters)
    new = np.array([locs[i][choice[i]] for i in range(model.n_clusters)])
    if odf is not None:
        templates = templates or exemplar_templates(model, params.template_spacing)
        cham = [chamfer_cost(templates[i][a], new[i], odf, params.penalty) for i, a in enumerate(config.exemplars)]
    else:
        cham = config.chamfer
    out = make_configuration(model, config.exemplars, new, cham, **config.meta)
    out.meta["refined"] = True
    return out


def detect(model, odf, params: InferenceParams = InferenceParams(), f: int | None = None,
           refine: bool | None = None, map_fn=map) -> Configuration:
    """Best configuration of ``model`` on ``odf``.

    Samples ``f`` configurations, minimizes each and keeps the lowest
    energy (earlier sample wins ties).  ``refine`` applies the
    deformation-only pass to the winner (or to every sample when
    ``params.refine_each`` is set).
    """
    f = params.n_configurations if f is None else f
    refine = params.refine if refine is None else refine
    templates = exemplar_templates(model, params.template_spacing)
    cands = sample_candidates(model, odf, params, templates)
    configs = sample_configurations(model, cands, f)

    def stage(c):
        c = minimize_energy(model, c, odf, params, templates)
        if refine and params.refine_each:
            c = refine_aesthetic(model, c, params.shift_radius, odf, params, templates)
        return c

    done = list(map_fn(stage, configs))
    best = min(range(len(done)), key=lambda k: (done[k].energy, k))
    out = done[best]
    if refine and not params.refine_each:
        out = refine_aesthetic(model, out, params.shift_radius, odf, params, templates)
    return out


def placed_strokes(model, config: Configuration) -> list:
    """``(cluster, strokes)`` for every placed exemplar."""
    return [
        (i, model.clusters[i].exemplars[a].placed(config.locations[i])) for i, a in enumerate(config.exemplars)
    ]


# --------------------------------------------------------------------------
# labelling training strokes


def _split_index(point_labels: np.ndarray, a: int, b: int) -> int:
    n = len(point_labels)
    best, best_score = 1, -1
    for first, second in ((a, b), (b, a)):
        pre = np.concatenate([[0], np.cumsum(point_labels == first)])
        suf = np.concatenate([np.cumsum((point_labels == second)[::-1])[::-1], [0]])
        score = pre[1:n] + suf[1:n]
        t = int(np.argmax(score)) + 1
        if score[t - 1] > best_score:
            best, best_score = t, score[t - 1]
    return best


def label_strokes(model, config: Configuration, sketch: Sketch, params: InferenceParams = InferenceParams(),
                  max_depth: int = 6):
    """Assign every raw stroke the cluster of the placed exemplar it overlaps most.

    A stroke whose samples split at least ``cut_fraction`` / ``cut_fraction``
    between two exemplars is cut at the transition and each fragment is
    labelled on its own.  Returns ``(cut_sketch, labels)`` with ``labels``
    mapping stroke id to cluster index.
    """
    placed = placed_strokes(model, config)
    ex_pts = [sample_strokes(strokes, 1.0)[0] for _, strokes in placed]
    trees = [cKDTree(p) for p in ex_pts]
    radius = params.overlap_radius

    def label_one(stroke, depth):
        pos = sample_positions(stroke.length, 1.0)
        pts = interpolate(stroke.points, pos)
        d = np.column_stack([t.query(pts)[0] for t in trees])
        covered = d <= radius
        overlap = covered.sum(axis=0)
        masked = np.where(covered, d, np.inf)
        point_label = np.where(covered.any(axis=1), np.argmin(masked, axis=1), -1)
        frac = np.bincount(point_label[point_label >= 0], minlength=len(trees)) / len(pts)
        top = np.lexsort((np.arange(len(frac)), -frac))[:2]
        if (depth < max_depth and len(top) == 2 and frac[top[1]] >= params.cut_fraction
                and frac[top[0]] >= params.cut_fraction and len(pts) >= 4):
            t = _split_index(point_label, int(top[0]), int(top[1]))
            cut_at = 0.5 * (pos[t - 1] + pos[t])
            cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(stroke.points, axis=0).T))])
            head = np.vstack([stroke.points[cum < cut_at], interpolate(stroke.points, [cut_at])])
            tail = np.vstack([interpolate(stroke.points, [cut_at]), stroke.points[cum > cut_at]])
            parts = [stroke.with_points(head, id="%s.0" % stroke.id), stroke.with_points(tail, id="%s.1" % stroke.id)]
            out = []
            for p in parts:
                out.extend(label_one(p, depth + 1))
            return out
        best = overlap.max()
        tied = np.flatnonzero(overlap == best)
        if best > 0 and len(tied) == 1:
            return [(stroke, int(tied[0]))]
        pool = tied if best > 0 else np.arange(len(trees))
        dists = [mhd(pts, ex_pts[i]) for i in pool]
        return [(stroke, int(pool[int(np.argmin(dists))]))]

    strokes, labels = [], {}
    for s in sketch.strokes:
        for frag, lab in label_one(s, 0):
            strokes.append(frag)
            labels[frag.id] = placed[lab][0]
    return sketch.with_strokes(strokes), labels


def configuration_sketch(model, config: Configuration, width: float, height: float) -> Sketch:
    """The placed exemplars as a sketch, strokes ordered by cluster index."""
    from .core import Stroke

    strokes = []
    for i, group in placed_strokes(model, config):
        for k, s in enumerate(group):
            strokes.append(Stroke("%d.%d" % (i, k), len(strokes), s.points))
    return Sketch(width, height, tuple(strokes))
