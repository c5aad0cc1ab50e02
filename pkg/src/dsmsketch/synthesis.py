"""Image-to-sketch synthesis inside a given bounding box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Sketch, Stroke, sketch_to_svg
from .edges import EdgeMap
from .errors import InvalidArgumentError
from .inference import InferenceParams, detect, placed_strokes
from .matching import build_odf


@dataclass(frozen=True)
class BoxMapping:
    """Uniform, centred (letterboxed) map from an image box to the model canvas."""

    origin: np.ndarray
    scale: float
    offset: np.ndarray

    @classmethod
    def fit(cls, bbox, canvas_width: float, canvas_height: float) -> "BoxMapping":
        x, y, w, h = (float(v) for v in bbox)
        if not (w > 0 and h > 0):
            raise InvalidArgumentError("bounding box needs positive width and height")
        s = min(canvas_width / w, canvas_height / h)
        off = np.array([(canvas_width - s * w) / 2.0, (canvas_height - s * h) / 2.0])
        return cls(np.array([x, y]), s, off)

    def to_canvas(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=float) - self.origin) * self.scale + self.offset

    def to_image(self, q) -> np.ndarray:
        return (np.asarray(q, dtype=float) - self.offset) / self.scale + self.origin


def clip_bbox(bbox, width: float, height: float):
    x, y, w, h = (float(v) for v in bbox)
    x0, y0 = max(x, 0.0), max(y, 0.0)
    x1, y1 = min(x + w, float(width)), min(y + h, float(height))
    if x1 <= x0 or y1 <= y0:
        raise InvalidArgumentError("bounding box %s lies outside the %gx%g image" % (tuple(bbox), width, height))
    return (x0, y0, x1 - x0, y1 - y0)


def canvas_edges(edge_map: EdgeMap, mapping: BoxMapping, width: int, height: int) -> np.ndarray:
    """Edge points mapped onto the model canvas raster; points landing off it are dropped."""
    if len(edge_map.points) == 0:
        return np.zeros((0, 3))
    q = mapping.to_canvas(edge_map.points[:, :2])
    px = np.floor(q + 0.5)
    ok = (px[:, 0] >= 0) & (px[:, 1] >= 0) & (px[:, 0] < width) & (px[:, 1] < height)
    return np.column_stack([q[ok], edge_map.points[ok, 2]])


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    sketch: Sketch
    configuration: object
    mapping: BoxMapping

    def svg(self, stroke_width: float = 2.0) -> str:
        return sketch_to_svg(self.sketch, stroke_width)


def synthesize(model, edge_map: EdgeMap, bbox=None, params: InferenceParams = InferenceParams(),
               map_fn=map) -> SynthesisResult:
    """Fit ``model`` to the edges inside ``bbox`` (``x, y, w, h``; default whole image).

    The box is scaled uniformly onto the model canvas, the model is
    detected and refined there, and the placed exemplars are mapped back to
    image coordinates.  Output strokes are ordered by cluster index.
    """
    if bbox is None:
        bbox = (0, 0, edge_map.width, edge_map.height)
    bbox = clip_bbox(bbox, edge_map.width, edge_map.height)
    w = int(round(model.canvas_width))
    h = int(round(model.canvas_height))
    mapping = BoxMapping.fit(bbox, model.canvas_width, model.canvas_height)
    odf = build_odf(canvas_edges(edge_map, mapping, w, h), w, h, params.n_channels)
    config = detect(model, odf, params, map_fn=map_fn)
    strokes = []
    for i, group in placed_strokes(model, config):
        for k, s in enumerate(group):
            strokes.append(Stroke("%d.%d" % (i, k), len(strokes), mapping.to_image(s.points)))
    sketch = Sketch(float(edge_map.width), float(edge_map.height), tuple(strokes))
    return SynthesisResult(sketch, config, mapping)
