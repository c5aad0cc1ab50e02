"""Edge maps: gradient-threshold extraction, sketch rendering, noise, file IO.

An edge map is an ``(N, 3)`` float array of ``x, y, orientation`` rows with
orientations in ``[0, pi)``, together with raster dimensions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .core import sample_strokes, dumps
from .errors import InvalidArgumentError

DEFAULT_GRADIENT_THRESHOLD = 100.0


@dataclass(frozen=True, eq=False)
class EdgeMap:
    points: np.ndarray  # (N, 3)
    width: int
    height: int

    def __len__(self):
        return len(self.points)


def load_grayscale(path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise OSError("cannot read image %s: %s" % (path, exc)) from exc


def extract_edges(image, threshold: float = DEFAULT_GRADIENT_THRESHOLD) -> EdgeMap:
    """Sobel edges of a grayscale raster.

    Pixels whose gradient magnitude exceeds ``threshold`` become edge points;
    their orientation is the gradient direction turned by 90 degrees, i.e.
    the local edge tangent.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise InvalidArgumentError("extract_edges expects a 2-D grayscale raster")
    gx = ndimage.sobel(img, axis=1, mode="nearest")
    gy = ndimage.sobel(img, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    ys, xs = np.nonzero(mag > threshold)
    theta = np.mod(np.arctan2(gy[ys, xs], gx[ys, xs]) + np.pi / 2, np.pi) % np.pi
    pts = np.column_stack([xs.astype(float), ys.astype(float), theta])
    return EdgeMap(pts, img.shape[1], img.shape[0])


def render_edges(strokes, width: int, height: int, spacing: float = 1.0) -> EdgeMap:
    """Edge points along polylines, one sample per ``spacing`` px of arc length.

    Samples are clamped into the raster.
    """
    pts, ori = sample_strokes(list(strokes), spacing)
    if len(pts):
        pts = np.column_stack([np.clip(pts[:, 0], 0, width - 1), np.clip(pts[:, 1], 0, height - 1)])
    return EdgeMap(np.column_stack([pts, ori]) if len(pts) else np.zeros((0, 3)), int(width), int(height))


def render_sketch_edges(sketch, spacing: float = 1.0) -> EdgeMap:
    w = int(np.ceil(sketch.canvas_width))
    h = int(np.ceil(sketch.canvas_height))
    return render_edges(sketch.strokes, w, h, spacing)


def salt_and_pepper(edge_map: EdgeMap, fraction: float, rng) -> EdgeMap:
    """Flip each pixel's edge state with probability ``fraction``.

    Edge pixels that flip lose all their edge points; background pixels
    that flip gain one point of uniformly random orientation.
    """
    w, h = edge_map.width, edge_map.height
    pts = edge_map.points
    pix = np.floor(pts[:, :2] + 0.5).astype(np.int64) if len(pts) else np.zeros((0, 2), dtype=np.int64)
    is_edge = np.zeros((h, w), dtype=bool)
    is_edge[pix[:, 1], pix[:, 0]] = True
    flip = rng.random((h, w)) < fraction
    keep = ~flip[pix[:, 1], pix[:, 0]]
    ys, xs = np.nonzero(flip & ~is_edge)
    salt = np.column_stack([xs, ys, rng.random(len(xs)) * np.pi]).astype(float)
    return EdgeMap(np.vstack([pts[keep], salt]), w, h)


def edge_map_to_dict(em: EdgeMap) -> dict:
    return {"width": em.width, "height": em.height, "points": [[float(v) for v in row] for row in em.points]}


def edge_map_from_dict(d: dict) -> EdgeMap:
    try:
        pts = np.array(d["points"], dtype=float).reshape(-1, 3)
        return EdgeMap(pts, int(d["width"]), int(d["height"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidArgumentError("edge JSON needs width, height and points [[x, y, theta], ...]") from exc


def save_edge_map(em: EdgeMap, path) -> None:
    Path(path).write_text(dumps(edge_map_to_dict(em)))


def load_edge_input(path, threshold: float = DEFAULT_GRADIENT_THRESHOLD) -> EdgeMap:
    """Read an edge map from JSON, or extract one from a PGM/PNG image."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise OSError("cannot read edge map %s: %s" % (path, exc)) from exc
        return edge_map_from_dict(d)
    return extract_edges(load_grayscale(path), threshold)


def edge_map_image(em: EdgeMap) -> np.ndarray:
    """Binary uint8 raster (255 on edges) for saving as an image."""
    img = np.zeros((em.height, em.width), dtype=np.uint8)
    if len(em.points):
        pix = np.floor(em.points[:, :2] + 0.5).astype(np.int64)
        ok = (pix[:, 0] >= 0) & (pix[:, 1] >= 0) & (pix[:, 0] < em.width) & (pix[:, 1] < em.height)
        img[pix[ok, 1], pix[ok, 0]] = 255
    return img
