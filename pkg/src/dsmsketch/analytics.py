"""Stroke statistics: length histograms, length classes, temporal-order rows.

All reports are plain dataclasses that serialize to JSON; ``*_svg``
helpers draw simple figures for visual inspection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .core import Sketch, svg_document
from .errors import InvalidArgumentError

SHORT, MEDIUM, LONG = "short", "medium", "long"
BELOW, ABOVE = "below", "above"

DEFAULT_SHORT_MAX = 1000.0
DEFAULT_LONG_MIN = 2000.0


@dataclass(frozen=True)
class LengthHistogram:
    bin_width: float
    counts: list

    @property
    def total(self) -> int:
        return int(sum(self.counts))


@dataclass(frozen=True)
class TemporalMatrix:
    """Rows of per-stroke codes in drawing order, sorted by stroke count."""

    rows: list
    sketch_index: list
    sort_key: str = "stroke count ascending"


def all_lengths(sketches) -> np.ndarray:
    if not sketches:
        return np.zeros(0)
    return np.concatenate([k.stroke_lengths() for k in sketches] + [np.zeros(0)])


def length_histogram(sketches, bin_width: float) -> LengthHistogram:
    """Counts of stroke lengths in right-open bins ``[i*w, (i+1)*w)``."""
    if not bin_width > 0:
        raise InvalidArgumentError("bin_width must be positive")
    lengths = all_lengths(sketches)
    if lengths.size == 0:
        return LengthHistogram(float(bin_width), [])
    idx = np.floor(lengths / bin_width).astype(int)
    counts = np.bincount(idx, minlength=idx.max() + 1)
    return LengthHistogram(float(bin_width), [int(c) for c in counts])


def length_class(length: float, short_max: float = DEFAULT_SHORT_MAX, long_min: float = DEFAULT_LONG_MIN) -> str:
    if not (0 < short_max <= long_min):
        raise InvalidArgumentError("need 0 < short_max <= long_min")
    if length < short_max:
        return SHORT
    if length > long_min:
        return LONG
    return MEDIUM


def class_counts(sketches, short_max=DEFAULT_SHORT_MAX, long_min=DEFAULT_LONG_MIN) -> dict:
    counts = {SHORT: 0, MEDIUM: 0, LONG: 0}
    for length in all_lengths(sketches):
        counts[length_class(length, short_max, long_min)] += 1
    return counts


def temporal_matrix(sketches) -> TemporalMatrix:
    """Mean-relative two-code rows; a stroke is ``above`` only if strictly longer than the mean."""
    rows = []
    for k in sketches:
        lengths = np.array([s.length for s in sorted(k.strokes, key=lambda s: s.order)])
        mean = lengths.mean() if lengths.size else 0.0
        rows.append([ABOVE if v > mean else BELOW for v in lengths])
    # stable: sketches with equal stroke counts keep input order
    order = sorted(range(len(rows)), key=lambda r: len(rows[r]))
    return TemporalMatrix([rows[r] for r in order], order)


def order_colormap(k: Sketch) -> list:
    """``(stroke id, order / (n - 1))`` for every stroke; 0 for a lone stroke."""
    n = len(k.strokes)
    ranks = sorted(k.strokes, key=lambda s: s.order)
    out = []
    for r, s in enumerate(ranks):
        out.append((s.id, 0.0 if n < 2 else r / (n - 1)))
    return out


def analysis_report(sketches, bin_width=100.0, short_max=DEFAULT_SHORT_MAX, long_min=DEFAULT_LONG_MIN) -> dict:
    hist = length_histogram(sketches, bin_width)
    tm = temporal_matrix(sketches)
    return {
        "n_sketches": len(sketches),
        "n_strokes": int(all_lengths(sketches).size),
        "histogram": asdict(hist),
        "thresholds": {"short_max": short_max, "long_min": long_min},
        "classes": class_counts(sketches, short_max, long_min),
        "temporal_matrix": {"rows": tm.rows, "sketch_index": tm.sketch_index},
        "order_colormaps": [
            {"sketch": k.name or str(i), "ranks": [[sid, r] for sid, r in order_colormap(k)]}
            for i, k in enumerate(sketches)
        ],
    }


# --------------------------------------------------------------------------
# figures


def histogram_svg(hist: LengthHistogram, width=600, height=300) -> str:
    counts = hist.counts or [0]
    top = max(max(counts), 1)
    bw = width / len(counts)
    body = []
    for i, c in enumerate(counts):
        h = (height - 20) * c / top
        body.append(
            '<rect x="%.2f" y="%.2f" width="%.2f" height="%.2f" fill="#4477aa"/>\n'
            % (i * bw, height - h, max(bw - 1, 0.5), h)
        )
    return svg_document(width, height, body)


def temporal_svg(tm: TemporalMatrix, cell=8) -> str:
    # yellow for longer than average, cyan for shorter
    ncols = max((len(r) for r in tm.rows), default=1)
    body = []
    for r, row in enumerate(tm.rows):
        for c, code in enumerate(row):
            color = "#f0d000" if code == ABOVE else "#00c0d0"
            body.append('<rect x="%d" y="%d" width="%d" height="%d" fill="%s"/>\n' % (c * cell, r * cell, cell, cell, color))
    return svg_document(ncols * cell, max(len(tm.rows), 1) * cell, body)


def order_color(rank: float) -> str:
    """Blue (first stroke) to red (last stroke)."""
    rank = min(max(rank, 0.0), 1.0)
    return "#%02x00%02x" % (int(math.floor(255 * rank + 0.5)), int(math.floor(255 * (1 - rank) + 0.5)))
