"""
Sketch synthesis from an edge map
=================================

A hand-built four-part model is placed at random, rendered to an edge map
and corrupted with salt-and-pepper noise.  Fitting the model back recovers
which exemplar was drawn for each part and where.
"""

from pathlib import Path

import numpy as np

from dsmsketch.edges import salt_and_pepper
from dsmsketch.synthesis import synthesize
from dsmsketch.synthetic import random_instance, render_instance, synthetic_model

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
rng = np.random.default_rng(3)

model = synthetic_model()
exemplars, locations = random_instance(model, rng)
edges = render_instance(model, exemplars, locations)
print("drawn exemplars", exemplars)

for noise in (0.0, 0.1):
    em = salt_and_pepper(edges, noise, rng) if noise else edges
    res = synthesize(model, em)
    c = res.configuration
    err = np.abs(res.mapping.to_image(c.locations) - locations).max()
    print("noise %.0f%%: exemplars %s, max location error %.1f px, energy %.2f"
          % (100 * noise, list(c.exemplars), err, c.energy))
    (out / ("synth_noise%d.svg" % round(100 * noise))).write_text(res.svg())
