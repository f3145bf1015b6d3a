"""Behavioral cloning of the scripted local navigator.

Runs a short DAGGER loop (expert demonstrations first, then on-policy
states relabeled by the expert), prints the per-round success rate, and
drives the cloned net through a held-out obstacle world.

Run:  python3 demos/local_nav_demo.py
"""
import numpy as np

from airground.local_nav import (
    CloneConfig,
    NavLimits,
    SteeringBins,
    evaluate_net,
    navigate,
    random_obstacle_world,
    train_clone,
)
from airground.scoremap import DrivabilityTable

config = CloneConfig(dagger_rounds=5, episodes_per_round=40, epochs=20,
                     seed=0, eval_worlds=15)
print("DAGGER training (5 rounds x 40 episodes) ...")
result = train_clone(random_obstacle_world, config)
for rnd, (rate, size) in enumerate(zip(result.success_rates, result.dataset_sizes)):
    print(f"  round {rnd}: success {rate:.0%} on eval worlds, dataset {size} pairs")

held_out = list(range(50_000, 50_030))
table = DrivabilityTable()
success, clean = evaluate_net(result.net, held_out, table, SteeringBins(),
                              NavLimits(max_steps=150))
print(f"\nHeld-out worlds: success {success:.0%}, collision-free {clean:.0%}")

world, waypoint = random_obstacle_world(50_000)
trajectory, feedbacks, outcome = navigate(result.net, world, [waypoint], table)
print(f"\nOne held-out run: outcome '{outcome}' in {len(trajectory) - 1} steps, "
      f"{sum(r.collided for r in trajectory)} collisions")
final = trajectory[-1].pose
print(f"  final pose ({final.px:.1f}, {final.py:.1f}), "
      f"waypoint center ({waypoint.x + 0.5}, {waypoint.y + 0.5})")
