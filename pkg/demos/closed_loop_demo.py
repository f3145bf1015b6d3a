"""The full aerial-to-ground loop, end to end.

One half of a 16x16 world is labeled class 1 and strewn with clutter the
aerial view cannot see. Iteration 1 plans through it optimistically, the
ground robot struggles, and the traversal feedback drops class 1's
drivability; iteration 2 replans around it. Artifacts land in
demos/out_closed_loop/.

Run:  python3 demos/closed_loop_demo.py
"""
import json
import os
import tempfile

import numpy as np

from airground.grids import ClassMap, obstacles_to_pgm
from airground.pipeline import ExperimentConfig, run_pipeline

size = 16
classes = np.zeros((size, size), dtype=np.int64)
classes[:, size // 2 :] = 1
rng = np.random.default_rng(42)
obstacles = np.zeros((size, size), dtype=bool)
obstacles[:, size // 2 :] = rng.random((size, size // 2)) < 0.55

workdir = tempfile.mkdtemp(prefix="closed_loop_inputs_")
classmap_path = os.path.join(workdir, "classes.pgm")
obstacles_path = os.path.join(workdir, "obstacles.pgm")
ClassMap(classes, 2).to_pgm(classmap_path)
obstacles_to_pgm(obstacles_path, obstacles)

out_dir = os.path.join(os.path.dirname(__file__), "out_closed_loop")
config = ExperimentConfig(
    out_dir=out_dir,
    class_map=classmap_path,
    obstacles=obstacles_path,
    loop_count=2,
    start=(2, 8),
    planner_iterations=60,
    planner_m=16,
    planner_horizon=40,
    planner_lr=0.05,
    plan_budget=40,
    waypoint_stride=6,
    seed=3,
)

print("Running two plan/navigate/update iterations ...")
summary = run_pipeline(config)
for it in summary["iterations"]:
    print(f"  iteration {it['iteration']}: navigation outcome '{it['outcome']}'")


def class1_cells(path_csv):
    lines = open(path_csv).read().splitlines()[1:]
    return sum(int(line.split(",")[3]) == 1 for line in lines)


def score(table_json, cid):
    table = json.load(open(table_json))
    return table["classes"].get(str(cid), {"score": table["prior"]})["score"]


print("\nDrivability score of the cluttered class:")
for it in range(3):
    print(f"  after iteration {it}: {score(os.path.join(out_dir, f'table_{it}.json'), 1):.2f}")

print("\nPlanned cells inside the cluttered class:")
for it in (1, 2):
    print(f"  plan {it}: {class1_cells(os.path.join(out_dir, f'path_{it}.csv'))} of 40")
print(f"\nAll artifacts written under {out_dir}/")
