"""
Stroke length and drawing order statistics
==========================================

Generates a corpus of random sketches with long-tailed stroke lengths and
looks at how lengths are distributed and how the long strokes fall in the
drawing order.
"""

from pathlib import Path

import numpy as np

from dsmsketch import analytics
from dsmsketch.synthetic import long_tailed_corpus

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

corpus = long_tailed_corpus(n_sketches=30, seed=0)
lengths = analytics.all_lengths(corpus)
print("%d sketches, %d strokes, median length %.0f px" % (len(corpus), lengths.size, np.median(lengths)))

# 100 px bins: most of the mass sits well below 1000 px
hist = analytics.length_histogram(corpus, 100)
scale = 60 / max(hist.counts)
for k, c in enumerate(hist.counts[:12]):
    print("%5d-%-5d %4d %s" % (k * 100, (k + 1) * 100, c, "#" * round(c * scale)))

# short < 1000 <= medium <= 2000 < long
print(analytics.class_counts(corpus))

# each row is one sketch in drawing order, marking strokes above or below the sketch mean
tm = analytics.temporal_matrix(corpus)
print("rows:", len(tm.rows), "longest row:", max(len(r) for r in tm.rows))
rows = [np.array(r) == analytics.ABOVE for r in tm.rows if len(r) > 1]
early = np.mean([r[: len(r) // 2].mean() for r in rows])
late = np.mean([r[len(r) // 2:].mean() for r in rows])
print("share of above-mean strokes, first half %.2f, second half %.2f" % (early, late))

(out / "histogram.svg").write_text(analytics.histogram_svg(hist))
(out / "temporal.svg").write_text(analytics.temporal_svg(tm))
print("figures written to", out)
