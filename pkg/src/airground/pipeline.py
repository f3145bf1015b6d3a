"""End-to-end experiment orchestration.

run_pipeline reproduces the full collaboration loop on files: segment (or
load) a class map, render a scoremap from the drivability table, train the
global planner, follow its waypoints in simulation, fold the traversal
feedback back into the table, and repeat. compare_baselines benchmarks the
trained planner against lawnmower and random-walk sweeps.
"""
from __future__ import annotations

import csv
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .grids import (
    ClassMap,
    ContinuousPose,
    GridPose,
    ScoreMap,
    SimWorld,
    obstacles_from_pgm,
    save_trajectory_csv,
)
from .global_planner import (
    FeatureGeometry,
    PlannerConfig,
    Rollout,
    baseline_boustrophedon,
    baseline_random_walk,
    discounted_return,
    greedy_rollout,
    rollout,
    save_policy,
    train,
)
from .local_nav import (
    NavLimits,
    SteeringBins,
    SteeringNet,
    navigate,
    navigate_expert,
)
from .pnm import read_ppm
from .scoremap import DrivabilityTable, render_scoremap, update_drivability
from .texture import segment


class StageError(RuntimeError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass
class ExperimentConfig:
    """Everything run_pipeline needs; all stages keyed off explicit seeds."""

    out_dir: str = "out"
    # segmentation inputs: either an aerial image or a precomputed class map
    image: str | None = None
    class_map: str | None = None
    obstacles: str | None = None
    table: str | None = None
    net: str | None = None  # local steering net; scripted expert when absent
    k: int = 3
    patch_size: int = 16
    loop_count: int = 2
    start: tuple = (0, 0)
    # global planner
    planner_iterations: int = 60
    planner_m: int = 16
    planner_horizon: int = 60
    planner_lr: float = 0.05
    plan_budget: int = 60
    waypoint_stride: int = 5
    # local navigation
    nav_max_steps: int = 300
    nav_speed: float = 1.0
    steering_m: int = 7
    seed: int = 0

    @classmethod
    def from_json(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        with open(path) as fh:
            payload = json.load(fh)
        payload.update({k: v for k, v in (overrides or {}).items() if v is not None})
        if "start" in payload:
            payload["start"] = tuple(payload["start"])
        return cls(**payload)


def _write_path_csv(path, ro_path: list[GridPose], class_map: ClassMap) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "x", "y", "class_id"])
        for i, cell in enumerate(ro_path):
            writer.writerow([i, cell.x, cell.y, int(class_map.classes[cell.y, cell.x])])


def write_waypoints_csv(path, waypoints: list[GridPose]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for wp in waypoints:
            writer.writerow([wp.x, wp.y])


def read_waypoints_csv(path) -> list[GridPose]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(GridPose(int(row["x"]), int(row["y"])))
    return out


def write_learning_curve(path, result) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "mean_reward", "baseline"])
        for i, (mr, b) in enumerate(zip(result.mean_rewards, result.baselines)):
            writer.writerow([i, f"{mr:.12g}", f"{b:.12g}"])


def run_pipeline(config: ExperimentConfig) -> dict:
    """Execute the closed loop and write per-iteration artifacts.

    Returns a summary dict with artifact paths and per-iteration outcomes.
    """
    out = config.out_dir
    os.makedirs(out, exist_ok=True)
    summary: dict = {"iterations": [], "out_dir": out}

    with _stage("segment"):
        if config.image is not None:
            image = read_ppm(config.image)
            class_map, model = segment(
                image, config.k, config.patch_size, seed=config.seed
            )
            class_map.to_pgm(os.path.join(out, "classmap.pgm"))
            model.to_json(os.path.join(out, "classmap.centroids.json"))
        elif config.class_map is not None:
            class_map = ClassMap.from_pgm(config.class_map)
        else:
            raise ValueError("config needs either an image or a class map")

    with _stage("world"):
        if config.obstacles is not None:
            obstacles = obstacles_from_pgm(config.obstacles)
        else:
            obstacles = np.zeros(class_map.classes.shape, dtype=bool)
        sx, sy = config.start
        robot = ContinuousPose(sx + 0.5, sy + 0.5, 0.0)
        world = SimWorld(class_map, obstacles, robot)
        table = (
            DrivabilityTable.from_json(config.table)
            if config.table is not None
            else DrivabilityTable()
        )
        net = SteeringNet.from_json(config.net) if config.net is not None else None
        bins = SteeringBins(config.steering_m)
        limits = NavLimits(max_steps=config.nav_max_steps, speed=config.nav_speed)

    with _stage("render"):
        scoremap = render_scoremap(class_map, table)
        scoremap.to_csv(os.path.join(out, "scoremap_0.csv"))
        scoremap.to_pgm(os.path.join(out, "scoremap_0.pgm"))
        table.to_json(os.path.join(out, "table_0.json"))

    geom = FeatureGeometry()
    for it in range(1, config.loop_count + 1):
        start_cell = world.robot.cell()
        with _stage(f"plan[{it}]"):
            result = train(
                scoremap,
                start_cell,
                PlannerConfig(
                    config.planner_iterations,
                    config.planner_m,
                    config.planner_horizon,
                    config.planner_lr,
                    config.seed + it,
                ),
                geom,
            )
            save_policy(os.path.join(out, f"policy_{it}.json"), result.theta, geom)
            write_learning_curve(os.path.join(out, f"curve_{it}.csv"), result)
            planned = greedy_rollout(result.theta, scoremap, start_cell, config.plan_budget, geom)
            _write_path_csv(os.path.join(out, f"path_{it}.csv"), planned.path, class_map)
            waypoints = planned.path[:: config.waypoint_stride]
            if waypoints[-1] != planned.path[-1]:
                waypoints.append(planned.path[-1])
            write_waypoints_csv(os.path.join(out, f"waypoints_{it}.csv"), waypoints)

        with _stage(f"navigate[{it}]"):
            if net is not None:
                trajectory, feedbacks, outcome = navigate(
                    net, world, waypoints, table, bins, limits
                )
            else:
                trajectory, feedbacks, outcome = navigate_expert(
                    world, waypoints, table, bins, limits
                )
            save_trajectory_csv(
                os.path.join(out, f"trajectory_{it}.csv"), trajectory, class_map
            )
            with open(os.path.join(out, f"feedback_{it}.json"), "w") as fh:
                json.dump(
                    [
                        {
                            "class_id": fb.class_id,
                            "progress_rate": fb.progress_rate,
                            "obstacle_incidents": fb.obstacle_incidents,
                            "steps": fb.steps,
                        }
                        for fb in feedbacks
                    ],
                    fh,
                    indent=1,
                )

        with _stage(f"update[{it}]"):
            for fb in feedbacks:
                table = update_drivability(table, fb)
            table.to_json(os.path.join(out, f"table_{it}.json"))
            scoremap = render_scoremap(class_map, table)
            scoremap.to_csv(os.path.join(out, f"scoremap_{it}.csv"))
            scoremap.to_pgm(os.path.join(out, f"scoremap_{it}.pgm"))

        summary["iterations"].append({"iteration": it, "outcome": outcome})

    table.to_json(os.path.join(out, "table_final.json"))
    return summary


BASELINE_METHODS = ("policy_gradient", "boustrophedon", "random_walk")


def compare_baselines(
    scoremap: ScoreMap,
    theta: np.ndarray,
    start: GridPose,
    budget: int,
    gamma: float,
    trials: int,
    seed: int,
    geom: FeatureGeometry | None = None,
) -> list[tuple]:
    """Discounted returns per method and trial, plus one summary row each.

    Rows: (method, trial, discounted_return, "", "") for every trial and
    (method, "summary", "", mean, std) per method; 3*trials + 3 rows.
    """
    if geom is None:
        geom = FeatureGeometry()
    rows = []
    per_method: dict[str, list] = {m: [] for m in BASELINE_METHODS}
    for trial in range(trials):
        rng = np.random.default_rng(seed * 1_000_003 + trial)
        runs = {
            "policy_gradient": rollout(theta, scoremap, start, budget, rng, geom),
            "boustrophedon": baseline_boustrophedon(scoremap, start, budget),
            "random_walk": baseline_random_walk(
                scoremap, start, budget, np.random.default_rng(seed * 2_000_003 + trial)
            ),
        }
        for method in BASELINE_METHODS:
            value = discounted_return(runs[method], gamma)
            per_method[method].append(value)
            rows.append((method, str(trial), f"{value:.12g}", "", ""))
    for method in BASELINE_METHODS:
        vals = np.array(per_method[method])
        rows.append((method, "summary", "", f"{vals.mean():.12g}", f"{vals.std():.12g}"))
    return rows


def write_baseline_csv(path, rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "trial", "discounted_return", "mean", "std"])
        writer.writerows(rows)
