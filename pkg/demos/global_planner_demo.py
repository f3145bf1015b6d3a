"""Policy-gradient coverage planning on a clustered scoremap.

Trains the REINFORCE planner on a random 20x20 map whose score mass sits
in a few Gaussian blobs, then compares the greedy learned sweep against
the boustrophedon (lawnmower) and random-walk baselines under the
discounted-return metric. Takes about half a minute.

Run:  python3 demos/global_planner_demo.py
"""
import numpy as np

from airground.global_planner import (
    PlannerConfig,
    baseline_boustrophedon,
    baseline_random_walk,
    discounted_return,
    greedy_rollout,
    random_clustered_scoremap,
    train,
)
from airground.grids import GridPose

scoremap = random_clustered_scoremap(20, 20, 4, seed=7)
start = GridPose(10, 10)
horizon = 80
gamma = 0.95

print(f"Training on a 20x20 map, total score {scoremap.total():.1f} ...")
config = PlannerConfig(iterations=80, m=16, horizon=horizon, learning_rate=0.05,
                       seed=0, gamma=gamma)
result = train(scoremap, start, config)
print(f"  mean sampled reward: {result.mean_rewards[0]:.2f} (first iteration) -> "
      f"{result.mean_rewards[-1]:.2f} (last)")

learned = greedy_rollout(result.theta, scoremap, start, horizon)
lawnmower = baseline_boustrophedon(scoremap, start, horizon)
walker = baseline_random_walk(scoremap, start, horizon, np.random.default_rng(1))

print(f"\nDiscounted return over {horizon} steps (gamma = {gamma}):")
for name, ro in (("learned policy", learned), ("boustrophedon", lawnmower),
                 ("random walk", walker)):
    print(f"  {name:15s} {discounted_return(ro, gamma):7.2f}"
          f"   (undiscounted {ro.total_reward:.2f})")

# crude path picture: * = visited, . = untouched
visited = {(p.x, p.y) for p in learned.path}
print("\nLearned sweep ('*' visited, 'S' start):")
for y in range(scoremap.height - 1, -1, -1):
    row = ""
    for x in range(scoremap.width):
        row += "S" if (x, y) == (start.x, start.y) else "*" if (x, y) in visited else "."
    print("  " + row)
