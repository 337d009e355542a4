"""Run the whole battery at once and render every output format.

The suite runner takes a config (dataset + models + parameters), scores
each model on all four metric families, and hands back one report that
can be rendered as a comparison table, serialized as JSON, or drawn as
a radar chart. This is exactly what the `eamex run` command does; here
the same thing is driven from Python.

Run with:  python3 demos/04_full_report.py
Outputs land in demos/output/.
"""

import json
from pathlib import Path

import numpy as np

from eamex import parse_config, render_radar, render_table, run_suite

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# ------------------------------------------------------------------
# Write a small dataset to CSV -- configs name files, not arrays, so
# the same config works from Python and from the command line.
# ------------------------------------------------------------------
rng = np.random.default_rng(3)
m, d = 250, 4
features = rng.normal(size=(m, d))
target = (features[:, 0] + 0.6 * features[:, 1] ** 2 > 0.4).astype(int)
names = ["lin", "quad", "spare1", "spare2"]

data_path = out_dir / "demo_data.csv"
with data_path.open("w") as fh:
    fh.write(",".join(names) + ",label\n")
    for row, y in zip(features, target):
        fh.write(",".join(repr(float(x)) for x in row) + f",{y}\n")
print(f"wrote {data_path} ({m} rows)")

# ------------------------------------------------------------------
# One config, two models. The logistic fit can only bend one way; the
# tree can capture the quadratic term -- the metrics make the
# difference visible side by side.
# ------------------------------------------------------------------
config = parse_config(
    {
        "dataset": {"path": "demo_data.csv", "target": "label", "task": "classification"},
        "models": [
            {"name": "logit", "kind": "logistic"},
            {"name": "tree", "kind": "tree"},
        ],
        "params": {"alpha": 0.8, "repeats": 5, "bootstraps": 15},
        "seed": 42,
    },
    base_dir=out_dir,
)

report = run_suite(config)

# ------------------------------------------------------------------
# Output 1: fixed-width comparison table. The REF column shows each
# row's ideal value. Rows the engine could not compute print as "—".
# ------------------------------------------------------------------
print()
print(render_table(report))

# ------------------------------------------------------------------
# Output 2: the JSON document — stable key order, so identical runs
# produce identical bytes. This is the machine-readable contract.
# ------------------------------------------------------------------
json_path = out_dir / "demo_report.json"
json_path.write_text(report.to_json())
tree_global = report.data["models"]["tree"]["global"]
print(f"wrote {json_path}")
print(f"tree spread divergence from JSON: {tree_global['spread_divergence']:.3f}")

# ------------------------------------------------------------------
# Output 3: the radar chart. One polygon per model over nine axes;
# a vertex on the outer ring means "at the reference value". Skipped
# metrics collapse to the center with a hover note explaining why.
# ------------------------------------------------------------------
svg_path = out_dir / "demo_radar.svg"
svg_path.write_bytes(render_radar(report))
print(f"wrote {svg_path} — open it in a browser to compare the two models")

# ------------------------------------------------------------------
# The same run, reproduced: seeded sampling means byte-equal JSON.
# ------------------------------------------------------------------
again = run_suite(config)
print(f"rerun produced identical bytes: {again.to_json() == report.to_json()}")
