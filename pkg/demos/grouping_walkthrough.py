"""
Perceptual grouping of raw strokes
==================================

Twelve gently bowed strokes in three rows are merged greedily.  Raising
the length budget lets groups grow longer before the length term stops
further merges.
"""

from pathlib import Path

import numpy as np

from dsmsketch.core import Sketch, Stroke
from dsmsketch.grouping import GroupingParams, group_sketch, groups_svg, pair_error

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

t = np.linspace(0, 1, 30)
strokes = []
for row in range(3):
    for k in range(4):
        pts = np.column_stack([100 + k * 340 + 300 * t, 300 + row * 150 + 10 * np.sin(np.pi * t)])
        strokes.append(Stroke(str(len(strokes)), len(strokes), pts))
sketch = Sketch(2000, 2000, tuple(strokes))

# neighbours in a row are cheap to merge, strokes in different rows are not
p = GroupingParams(tau=1500)
print("error(0, 1) = %.3f" % pair_error(sketch.strokes[0], sketch.strokes[1], p, sketch))
print("error(0, 4) = %.3f" % pair_error(sketch.strokes[0], sketch.strokes[4], p, sketch))

for tau in (500, 1500, 3000):
    groups = group_sketch(sketch, GroupingParams(tau=tau))
    mean = np.mean([g.total_length for g in groups])
    print("tau %4d: %d groups, mean length %.1f" % (tau, len(groups), mean))
    for g in groups:
        print("   ", g.members)
    (out / ("groups_tau%d.svg" % tau)).write_text(groups_svg(sketch, groups, 4))
