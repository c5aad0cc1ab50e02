"""Perceptual grouping of raw strokes into semantic strokes.

Every stroke pair gets a grouping error that combines proximity,
continuity, combined length, shape similarity, drawing-order closeness and
(after the first training iteration) model-label agreement.  Pairs are then
merged greedily in order of increasing error until the smallest remaining
error reaches the threshold ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .core import Sketch, Stroke, interpolate, resample_stroke, svg_document, svg_paths, PALETTE
from .errors import InvalidArgumentError
from .matching import mhd, sc_cost, shape_context, shape_cost_matrix

REVERSED = "reversed"
LITERAL = "literal"


@dataclass(frozen=True)
class GroupingParams:
    """Weights and scales of the pairwise grouping error.

    ``tau=None`` means ``tau_fraction`` times the longest stroke of the
    sketch when ``eta_sem == 1`` and the longest stroke otherwise;
    ``sigma=None`` means the median pairwise shape-context cost;
    ``eta_avg=None`` means the sketch's own raw stroke count.
    """

    w_pro: float = 0.33
    w_con: float = 0.33
    w_len: float = 0.33
    w_sim: float = 0.33
    mu_temp: float = 0.33
    mu_mod: float = 0.33
    sigma: float | None = None
    tau: float | None = None
    tau_fraction: float = 0.9
    eta_sem: float = 1.0
    h: float = 1.0
    eta_avg: float | None = None
    inward: float = 10.0
    sample_spacing: float = 2.0
    n_samples: int = 30
    radial_bins: int = 5
    angle_bins: int = 12
    continuity: str = REVERSED

    def __post_init__(self):
        for name in ("w_pro", "w_con", "w_len", "w_sim"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError("%s must be >= 0" % name)
        for name in ("mu_temp", "mu_mod"):
            if not 0 <= getattr(self, name) < 1:
                raise InvalidArgumentError("%s must lie in [0, 1)" % name)
        if self.tau is not None and not self.tau > 0:
            raise InvalidArgumentError("tau must be positive")
        if not self.eta_sem >= 1:
            raise InvalidArgumentError("eta_sem must be >= 1")
        if self.continuity not in (REVERSED, LITERAL):
            raise InvalidArgumentError("continuity must be %r or %r" % (REVERSED, LITERAL))

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **kw) -> "GroupingParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class SemanticGroup:
    group_id: int
    members: tuple  # stroke ids
    total_length: float


# --------------------------------------------------------------------------
# individual terms


def proximity_scale(canvas_area: float, eta_avg: float) -> float:
    return math.sqrt(canvas_area / eta_avg) / 2.0


def d_pro(s_i: Stroke, s_j: Stroke, eps_pro: float, spacing: float = 2.0) -> float:
    a = resample_stroke(s_i, spacing).points
    b = resample_stroke(s_j, spacing).points
    return mhd(a, b) / eps_pro


def _inward_point(s: Stroke, at_start: bool, distance: float) -> np.ndarray:
    total = s.length
    if total < distance:
        return s.points[-1] if at_start else s.points[0]
    return interpolate(s.points, [distance if at_start else total - distance])[0]


def _angle(u, v) -> float:
    nu, nv = math.hypot(*u), math.hypot(*v)
    if nu == 0 or nv == 0:
        return 0.0
    c = float(np.dot(u, v)) / (nu * nv)
    return math.acos(min(1.0, max(-1.0, c)))


def continuity_geometry(s_i: Stroke, s_j: Stroke, inward: float = 10.0, convention: str = REVERSED):
    """Closest endpoint gap and facing angle ``(gap, theta)``."""
    ends_i = ((s_i.points[0], True), (s_i.points[-1], False))
    ends_j = ((s_j.points[0], True), (s_j.points[-1], False))
    best = None
    for x, xs in ends_i:
        for y, ys in ends_j:
            g = math.hypot(*(x - y))
            if best is None or g < best[0]:
                best = (g, x, xs, y, ys)
    gap, x, xs, y, ys = best
    xp = _inward_point(s_i, xs, inward)
    yp = _inward_point(s_j, ys, inward)
    into_gap = x - xp
    other = (yp - y) if convention == REVERSED else (y - yp)
    return gap, _angle(into_gap, other)


def d_con(s_i: Stroke, s_j: Stroke, eps_con: float, inward: float = 10.0, convention: str = REVERSED) -> float:
    """Endpoint gap times ``1 + theta`` over ``eps_con``.

    Under the default convention ``theta`` is zero for a smooth continuation.
    """
    gap, theta = continuity_geometry(s_i, s_j, inward, convention)
    return gap * (1.0 + theta) / eps_con


def d_len(s_i: Stroke, s_j: Stroke, lam: float, group_length: dict | None = None) -> float:
    """Combined length over ``lam``; grouped strokes count their group's total length."""
    group_length = group_length or {}
    p_i = group_length.get(s_i.id, s_i.length)
    p_j = group_length.get(s_j.id, s_j.length)
    return (p_i + p_j) / lam


def similarity_bonus(k: float, sigma: float) -> float:
    return math.exp(-(k * k) / (sigma * sigma))


def b_sim(s_i: Stroke, s_j: Stroke, sigma: float, n_samples: int = 30, radial_bins: int = 5, angle_bins: int = 12) -> float:
    k = sc_cost(shape_context(s_i, n_samples, radial_bins, angle_bins), shape_context(s_j, n_samples, radial_bins, angle_bins))
    return similarity_bonus(k, sigma)


def f_temp(s_i: Stroke, s_j: Stroke, delta: float, mu_temp: float) -> float:
    return 1.0 - mu_temp if abs(s_i.order - s_j.order) < delta else 1.0 + mu_temp


def f_mod(s_i: Stroke, s_j: Stroke, labels, mu_mod: float) -> float:
    if not labels or s_i.id not in labels or s_j.id not in labels:
        return 1.0
    return 1.0 - mu_mod if labels[s_i.id] == labels[s_j.id] else 1.0 + mu_mod


def combine_error(dpro, dcon, dlen, bsim, ftemp, fmod, params: GroupingParams):
    return (params.w_pro * dpro + params.w_con * dcon + params.w_len * dlen - params.w_sim * bsim) * ftemp * fmod


# --------------------------------------------------------------------------
# per-sketch context


@dataclass
class GroupingContext:
    """Cached pairwise terms for one sketch."""

    strokes: list
    lengths: np.ndarray
    lam: float
    eps_pro: float
    eps_con: float
    delta: float
    sigma: float
    d_pro: np.ndarray
    d_con: np.ndarray
    b_sim: np.ndarray
    factors: np.ndarray  # f_temp * f_mod
    params: GroupingParams
    shape_costs: np.ndarray = field(repr=False, default=None)

    def errors(self, eff_lengths: np.ndarray) -> np.ndarray:
        dlen = (eff_lengths[:, None] + eff_lengths[None, :]) / self.lam
        return combine_error(self.d_pro, self.d_con, dlen, self.b_sim, self.factors, 1.0, self.params)


def _shape_costs(strokes, params, map_fn=map):
    descs = []
    for s in strokes:
        try:
            descs.append(shape_context(s, params.n_samples, params.radial_bins, params.angle_bins))
        except InvalidArgumentError:
            descs.append(None)
    ok = [i for i, d in enumerate(descs) if d is not None]
    k = np.zeros((len(strokes), len(strokes)))
    if ok:
        sub = shape_cost_matrix([descs[i] for i in ok], map_fn)
        k[np.ix_(ok, ok)] = sub
    bad = [i for i, d in enumerate(descs) if d is None]
    if bad:
        # zero-length strokes: treat as maximally dissimilar in shape
        fill = k.max() if k.size else 1.0
        k[bad, :] = fill
        k[:, bad] = fill
        k[bad, bad] = 0.0
    return k


def default_tau(lengths, params: GroupingParams) -> float:
    """``tau_fraction`` of the longest stroke when parts are single strokes, else the longest stroke."""
    longest = float(lengths.max()) if len(lengths) else 1.0
    return params.tau_fraction * longest if params.eta_sem == 1 else longest


def grouping_context(k: Sketch, params: GroupingParams, labels=None, map_fn=map) -> GroupingContext:
    strokes = list(k.strokes)
    n = len(strokes)
    lengths = np.array([s.length for s in strokes])
    eta_avg = params.eta_avg if params.eta_avg else max(n, 1)
    eps_pro = proximity_scale(k.area, eta_avg)
    eps_con = eps_pro / 4.0
    delta = n / eta_avg
    tau = params.tau if params.tau is not None else default_tau(lengths, params)
    lam = max(tau, 1e-12) * params.eta_sem

    dp = np.zeros((n, n))
    dc = np.zeros((n, n))
    ft = np.ones((n, n))
    samples = [resample_stroke(s, params.sample_spacing).points for s in strokes]
    for i in range(n):
        for j in range(i + 1, n):
            dp[i, j] = dp[j, i] = mhd(samples[i], samples[j]) / eps_pro
            dc[i, j] = dc[j, i] = d_con(strokes[i], strokes[j], eps_con, params.inward, params.continuity)
            ft[i, j] = ft[j, i] = f_temp(strokes[i], strokes[j], delta, params.mu_temp) * f_mod(
                strokes[i], strokes[j], labels, params.mu_mod)
    if params.w_sim > 0 and n > 1:
        kc = _shape_costs(strokes, params, map_fn)
        if params.sigma is not None:
            sigma = params.sigma
        else:
            iu = np.triu_indices(n, 1)
            sigma = float(np.median(kc[iu]))
        if not sigma > 0:
            sigma = 1.0
        bs = np.exp(-(kc ** 2) / sigma ** 2)
    else:
        kc = np.zeros((n, n))
        sigma = params.sigma or 1.0
        bs = np.zeros((n, n))
    return GroupingContext(strokes, lengths, lam, eps_pro, eps_con, delta, sigma, dp, dc, bs, ft, params, kc)


def pair_error(s_i: Stroke, s_j: Stroke, params: GroupingParams, sketch: Sketch, groups=None, labels=None) -> float:
    """Grouping error of one stroke pair within ``sketch``.

    ``groups`` is an optional list of ``SemanticGroup`` whose total lengths
    replace member stroke lengths in the length term.
    """
    if s_i.id == s_j.id:
        raise InvalidArgumentError("pair_error needs two distinct strokes")
    ctx = grouping_context(sketch, params, labels)
    idx = {s.id: n for n, s in enumerate(ctx.strokes)}
    eff = ctx.lengths.copy()
    for g in groups or ():
        for m in g.members:
            eff[idx[m]] = g.total_length
    return float(ctx.errors(eff)[idx[s_i.id], idx[s_j.id]])


# --------------------------------------------------------------------------
# greedy merging


def greedy_merge(errors: np.ndarray, lengths: np.ndarray, h: float, recompute):
    """Greedy pairwise merging on a symmetric error matrix.

    ``recompute(eff_lengths)`` returns the full error matrix for updated
    effective lengths.  Returns ``(group_of, merges)`` with ``group_of[i]``
    in ``-1`` (orphan) or a group index, and the ordered list of merged pairs.
    """
    n = len(lengths)
    err = np.array(errors, dtype=float)
    active = np.triu(np.ones((n, n), dtype=bool), 1)
    group_of = np.full(n, -1)
    members = []
    eff = np.array(lengths, dtype=float)
    merges = []
    while active.any():
        view = np.where(active, err, np.inf)
        flat = int(np.argmin(view))
        a, b = divmod(flat, n)
        min_error = view[a, b]
        if not min_error < h:
            break
        active[a, b] = False
        ga, gb = group_of[a], group_of[b]
        if ga < 0 and gb < 0:
            g = len(members)
            members.append([a, b])
            group_of[[a, b]] = g
        elif ga < 0 or gb < 0:
            g = ga if ga >= 0 else gb
            new = a if ga < 0 else b
            members[g].append(new)
            group_of[new] = g
        else:
            continue
        merges.append((a, b))
        total = lengths[members[g]].sum()
        eff[members[g]] = total
        fresh = recompute(eff)
        rows = np.array(members[g])
        err[rows, :] = fresh[rows, :]
        err[:, rows] = fresh[:, rows]
    return group_of, merges


def group_sketch(k: Sketch, params: GroupingParams = GroupingParams(), labels=None, context=None) -> list:
    """Group a sketch's strokes into semantic groups.

    ``labels`` maps stroke id to a model cluster label.  Returns groups
    numbered by their first member's position in ``k.strokes``; every stroke
    belongs to exactly one group.
    """
    ctx = context if context is not None else grouping_context(k, params, labels)
    n = len(ctx.strokes)
    if n == 0:
        return []
    group_of, _ = greedy_merge(ctx.errors(ctx.lengths), ctx.lengths, params.h, ctx.errors)
    buckets = {}
    for i in range(n):
        key = ("g", group_of[i]) if group_of[i] >= 0 else ("s", i)
        buckets.setdefault(key, []).append(i)
    ordered = sorted(buckets.values(), key=lambda m: min(m))
    return [
        SemanticGroup(gid, tuple(ctx.strokes[i].id for i in sorted(m)), float(ctx.lengths[sorted(m)].sum()))
        for gid, m in enumerate(ordered)
    ]


def group_strokes(k: Sketch, groups) -> list:
    """The strokes of each group, as lists of ``Stroke``."""
    by_id = {s.id: s for s in k.strokes}
    return [[by_id[m] for m in g.members] for g in groups]


def assignment(groups) -> dict:
    return {m: g.group_id for g in groups for m in g.members}


def groups_svg(k: Sketch, groups, stroke_width: float = 2.0) -> str:
    gid = assignment(groups)
    colors = [PALETTE[gid[s.id] % len(PALETTE)] for s in k.strokes]
    return svg_document(k.canvas_width, k.canvas_height, svg_paths(k.strokes, colors, stroke_width))
