"""Iterative model training: grouping, learning and self-labelling in turns."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import cut_sketch, flip_horizontal
from .edges import render_sketch_edges
from .errors import DetectionInfeasibleError, InvalidArgumentError, InvalidModelError
from .grouping import GroupingParams, group_sketch
from .inference import InferenceParams, detect, label_strokes
from .learning import LearningParams, learn_model
from .matching import build_odf

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingParams:
    grouping: GroupingParams = GroupingParams()
    learning: LearningParams = LearningParams()
    inference: InferenceParams = InferenceParams()
    cut_length: float = 2000.0
    max_iters: int = 5
    patience: int = 2


@dataclass(eq=False)
class IterationRecord:
    iteration: int
    counts: list
    variance: float
    sketches: list = field(repr=False, default=None)
    groups: list = field(repr=False, default=None)
    labels: list = field(repr=False, default=None)
    model: object = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "counts": list(self.counts),
            "variance": self.variance,
            "mean_count": float(np.mean(self.counts)),
            "groups": [
                {m: g.group_id for g in gs for m in g.members} for gs in self.groups
            ],
        }


def count_variance(counts) -> float:
    """Population variance of per-sketch semantic-stroke counts."""
    c = np.asarray(counts, dtype=float)
    if c.size == 0:
        raise InvalidArgumentError("count_variance needs at least one count")
    return float(np.mean((c - c.mean()) ** 2))


def self_label(model, sketch, params: InferenceParams):
    """Detect the model on a sketch's own rendering and label its strokes.

    Mirrored sketches are matched in the model's facing direction and
    returned in their original orientation.
    """
    work = flip_horizontal(sketch) if sketch.mirrored else sketch
    em = render_sketch_edges(work)
    odf = build_odf(em.points, em.width, em.height, params.n_channels)
    config = detect(model, odf, params)
    cut, labels = label_strokes(model, config, work)
    if sketch.mirrored:
        cut = flip_horizontal(cut)
    return cut, labels


def train_iterative(sketches, params: TrainingParams = TrainingParams(), max_iters: int | None = None,
                    map_fn=map):
    """Alternate grouping, learning and self-labelling.

    Iteration 1 groups without labels.  Each later iteration labels every
    training sketch with the previous model and regroups with those
    labels.  The loop stops after ``max_iters`` iterations or once the
    count variance has failed to improve ``patience`` times in a row.

    Returns ``(model, records, selected)`` where ``model`` was learned from
    the groups of iteration ``selected``, the one with minimal variance
    (earliest on ties).
    """
    if len(sketches) < 2:
        raise InvalidArgumentError("need at least 2 training sketches")
    max_iters = params.max_iters if max_iters is None else max_iters
    if max_iters < 1:
        raise InvalidArgumentError("max_iters must be >= 1")

    current = [cut_sketch(k, params.cut_length) for k in sketches]
    labels = [None] * len(current)
    eta_avg = float(np.mean([len(k) for k in current]))
    records = []
    best_var = np.inf
    stale = 0
    for it in range(1, max_iters + 1):
        gp = params.grouping.replace(eta_avg=eta_avg)
        groups = list(map_fn(lambda kl: group_sketch(kl[0], gp, kl[1]), zip(current, labels)))
        counts = [len(g) for g in groups]
        var = count_variance(counts)
        try:
            model = learn_model(list(zip(current, groups)), params.learning, map_fn)
        except InvalidModelError as exc:
            raise InvalidModelError("iteration %d: %s" % (it, exc)) from exc
        records.append(IterationRecord(it, counts, var, current, groups, labels, model))
        log.info("iteration %d: counts %s variance %.4f", it, counts, var)

        if var < best_var:
            best_var, stale = var, 0
        else:
            stale += 1
        if it == max_iters or stale >= params.patience or var == 0:
            break

        def relabel(k):
            try:
                return self_label(model, k, params.inference)
            except DetectionInfeasibleError as exc:
                raise DetectionInfeasibleError(
                    exc.empty_clusters, "iteration %d, sketch %r: %s" % (it, k.name, exc)) from exc

        out = list(map_fn(relabel, current))
        current = [c for c, _ in out]
        labels = [lab for _, lab in out]
        eta_avg = float(np.mean(counts))

    selected = min(range(len(records)), key=lambda r: (records[r].variance, r))
    # models are deterministic in their groups, so the stored one is the relearned one
    return records[selected].model, records, records[selected].iteration
