"""
Learning a stroke model from sketches
=====================================

Ten synthetic sketches of a three-part object, some with a part drawn in
one stroke too many.  Training alternates grouping, model learning and
labelling the training sketches with the current model, then keeps the
iteration whose semantic-stroke counts agree best across sketches.
"""

import logging
from pathlib import Path

from dsmsketch.learning import cluster_montage_svg
from dsmsketch.model import save_model
from dsmsketch.synthetic import three_part_corpus
from dsmsketch.training import train_iterative

logging.basicConfig(level=logging.INFO, format="%(message)s")
out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

corpus = three_part_corpus(10, seed=1, split_extra=True)
print("raw strokes per sketch:", [len(k) for k in corpus])

model, records, selected = train_iterative(corpus)
for r in records:
    print("iteration %d: counts %s variance %.3f" % (r.iteration, r.counts, r.variance))
print("selected iteration", selected)

print("%d clusters, root %d, edges %s" % (model.n_clusters, model.root, list(model.edges)))
for (i, j), g in zip(model.edges, model.offsets):
    print("  l%d - l%d ~ mean (%.1f, %.1f)" % (i, j, *g.mean))

save_model(model, out / "three_part_model.json")
(out / "three_part_clusters.svg").write_text(cluster_montage_svg(model))
