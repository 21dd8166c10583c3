"""Spatial constraints as probability fields.

Walks the field algebra end to end on the lure drill: render the passing-lane
field and the two side-of-the-defender fields, compose them with AND/OR,
normalize, and sample concrete positions. Writes CSV dumps and a heatmap PNG
next to this script (out/).
"""
import pathlib

import numpy as np

from tacticforge.constraints import And, Call, EvalContext, Or, field
from tacticforge.fields import normalize, sample, to_csv
from tacticforge.fixtures import lure_scenario

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

scenario = lure_scenario("chase")
ctx = EvalContext(scenario.workspace, scenario.entity_map(), scenario.initial)

# Three leaf fields. Each answers: where could the avatar stand so that...
lane = Call("PassingLane", ("teammate", "self", 2.0))      # ...the pass is clear
left = Call("SideOf", ("self", "opponent", "horizontal", "left"))
right = Call("SideOf", ("self", "opponent", "horizontal", "right"))

# AND multiplies, OR adds. The composed field is "clear lane AND on a flank".
composed = field(And(lane, Or(left, right)), ctx)
print("composed field: min %.3f max %.3f" % (composed.values.min(), composed.values.max()))

for name, expr in (("lane", lane), ("left", left), ("right", right)):
    (OUT / f"field_{name}.csv").write_text(to_csv(field(expr, ctx)))
(OUT / "field_composed.csv").write_text(to_csv(composed))

# Normalize to a distribution, then sample destinations: same seed, same point.
dist = normalize(composed)
for seed in (1, 2, 3):
    x, y = sample(dist, seed)
    print(f"seed {seed}: sampled flank destination ({x:.2f}, {y:.2f})")
assert sample(dist, 1) == sample(dist, 1)

# The dark band behind the defender is the occlusion cone.
try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 5))
    ws = scenario.workspace
    im = ax.imshow(dist.values, origin="lower", cmap="viridis",
                   extent=(ws.x_min, ws.x_max, ws.y_min, ws.y_max))
    for eid, marker in (("teammate", "^"), ("opponent", "s"), ("user", "o")):
        px, py = scenario.initial.positions[eid]
        ax.plot(px, py, marker, color="white", markersize=9)
        ax.annotate(eid, (px, py), color="white", fontsize=8,
                    xytext=(4, 4), textcoords="offset points")
    fig.colorbar(im, ax=ax, label="probability mass")
    ax.set_title("clear lane AND (left OR right of the defender)")
    fig.tight_layout()
    fig.savefig(OUT / "field_composed.png", dpi=120)
    print(f"wrote {OUT / 'field_composed.png'}")
except ImportError:
    print("matplotlib unavailable; skipped the heatmap")

print(f"CSV dumps in {OUT}/")
