"""Command-line front end: one subcommand per pipeline stage plus the
closed-loop runner and the baseline comparison."""
from __future__ import annotations

import json
import sys

import click
import numpy as np

from .grids import ClassMap, ContinuousPose, GridPose, ScoreMap, SimWorld, obstacles_from_pgm, save_trajectory_csv
from .global_planner import (
    FeatureGeometry,
    PlannerConfig,
    greedy_rollout,
    load_policy,
    plan_waypoints,
    save_policy,
    train,
)
from .local_nav import (
    CloneConfig,
    NavLimits,
    SteeringBins,
    SteeringNet,
    navigate,
    random_obstacle_world,
    train_clone,
)
from .pipeline import (
    ExperimentConfig,
    StageError,
    compare_baselines,
    read_waypoints_csv,
    run_pipeline,
    write_baseline_csv,
    write_learning_curve,
    write_waypoints_csv,
)
from .pnm import read_ppm
from .scoremap import DrivabilityTable, render_scoremap
from .texture import segment


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


@click.group()
def main():
    """Aerial-to-ground informative sampling pipeline."""


@main.command("segment")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--image", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=None)
@click.option("--patch", type=int, default=None)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(), required=True)
def segment_cmd(config_path, image, k, patch, seed, out):
    """Segment an aerial PPM image into a class-map PGM."""
    cfg = _load_config(config_path)
    k = k if k is not None else cfg.get("k", 4)
    patch = patch if patch is not None else cfg.get("patch_size", 16)
    class_map, model = segment(read_ppm(image), k, patch, seed=seed)
    class_map.to_pgm(out)
    model.to_json(str(out) + ".json")
    click.echo(f"wrote {out} ({class_map.width}x{class_map.height}, k={k})")


@main.command("render-scoremap")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--classmap", type=click.Path(exists=True), required=True)
@click.option("--table", type=click.Path(exists=True), default=None)
@click.option("--out-csv", type=click.Path(), required=True)
@click.option("--out-pgm", type=click.Path(), default=None)
def render_scoremap_cmd(config_path, classmap, table, out_csv, out_pgm):
    """Render a scoremap CSV (and optional PGM) from a class map."""
    tab = DrivabilityTable.from_json(table) if table else DrivabilityTable()
    scoremap = render_scoremap(ClassMap.from_pgm(classmap), tab)
    scoremap.to_csv(out_csv)
    if out_pgm:
        scoremap.to_pgm(out_pgm)
    click.echo(f"wrote {out_csv}")


@main.command("train-planner")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--scoremap", "scoremap_path", type=click.Path(exists=True), required=True)
@click.option("--iters", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--horizon", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--start-x", type=int, default=0)
@click.option("--start-y", type=int, default=0)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--curve", type=click.Path(), default=None)
def train_planner_cmd(config_path, scoremap_path, iters, m, horizon, lr, gamma, start_x, start_y, seed, out, curve):
    """Train the policy-gradient planner on a scoremap CSV."""
    cfg = _load_config(config_path)
    planner_cfg = PlannerConfig(
        iterations=iters if iters is not None else cfg.get("iterations", 300),
        m=m if m is not None else cfg.get("m", 32),
        horizon=horizon if horizon is not None else cfg.get("horizon", 100),
        learning_rate=lr if lr is not None else cfg.get("learning_rate", 0.01),
        seed=seed,
        gamma=gamma if gamma is not None else cfg.get("gamma", 1.0),
    )
    scoremap = ScoreMap.from_csv(scoremap_path)
    geom = FeatureGeometry()
    result = train(scoremap, GridPose(start_x, start_y), planner_cfg, geom)
    save_policy(out, result.theta, geom)
    if curve:
        write_learning_curve(curve, result)
    click.echo(f"wrote {out} (final mean reward {result.mean_rewards[-1]:.4g})")


@main.command("plan")
@click.option("--policy", type=click.Path(exists=True), required=True)
@click.option("--scoremap", "scoremap_path", type=click.Path(exists=True), required=True)
@click.option("--start-x", type=int, default=0)
@click.option("--start-y", type=int, default=0)
@click.option("--budget", type=int, required=True)
@click.option("--stride", type=int, default=5)
@click.option("--out", type=click.Path(), required=True)
def plan_cmd(policy, scoremap_path, start_x, start_y, budget, stride, out):
    """Greedy waypoint plan from a trained policy (deterministic)."""
    theta, geom = load_policy(policy)
    scoremap = ScoreMap.from_csv(scoremap_path)
    waypoints = plan_waypoints(theta, scoremap, GridPose(start_x, start_y), budget, stride, geom)
    write_waypoints_csv(out, waypoints)
    click.echo(f"wrote {out} ({len(waypoints)} waypoints)")


@main.command("train-local")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--rounds", type=int, default=None)
@click.option("--episodes", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--dataset", type=click.Path(), default=None, help="Also dump the aggregated dataset CSV.")
def train_local_cmd(config_path, rounds, episodes, epochs, seed, out, dataset):
    """Train the local steering net by DAGGER-style cloning."""
    from .local_nav import save_dataset_csv

    cfg = _load_config(config_path)
    clone_cfg = CloneConfig(
        dagger_rounds=rounds if rounds is not None else cfg.get("dagger_rounds", 5),
        episodes_per_round=episodes if episodes is not None else cfg.get("episodes_per_round", 40),
        epochs=epochs if epochs is not None else cfg.get("epochs", 20),
        seed=seed,
    )
    result = train_clone(random_obstacle_world, clone_cfg)
    result.net.to_json(out)
    if dataset:
        save_dataset_csv(dataset, result.dataset_x, result.dataset_y)
    rates = ", ".join(f"{r:.2f}" for r in result.success_rates)
    click.echo(f"wrote {out} (success per round: {rates})")


@main.command("navigate")
@click.option("--net", type=click.Path(exists=True), required=True)
@click.option("--classmap", type=click.Path(exists=True), required=True)
@click.option("--obstacles", type=click.Path(exists=True), default=None)
@click.option("--waypoints", type=click.Path(exists=True), required=True)
@click.option("--table", type=click.Path(exists=True), default=None)
@click.option("--start-x", type=float, required=True)
@click.option("--start-y", type=float, required=True)
@click.option("--out", type=click.Path(), required=True)
def navigate_cmd(net, classmap, obstacles, waypoints, table, start_x, start_y, out):
    """Follow waypoints with a trained net, writing the trajectory CSV."""
    class_map = ClassMap.from_pgm(classmap)
    obs = (
        obstacles_from_pgm(obstacles)
        if obstacles
        else np.zeros(class_map.classes.shape, dtype=bool)
    )
    world = SimWorld(class_map, obs, ContinuousPose(start_x, start_y, 0.0))
    tab = DrivabilityTable.from_json(table) if table else DrivabilityTable()
    trajectory, feedbacks, outcome = navigate(
        SteeringNet.from_json(net), world, read_waypoints_csv(waypoints), tab
    )
    save_trajectory_csv(out, trajectory, class_map)
    click.echo(f"wrote {out} (outcome: {outcome}, {len(trajectory) - 1} steps)")


@main.command("run-pipeline")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--loop-count", type=int, default=None)
@click.option("--seed", type=int, default=None)
def run_pipeline_cmd(config_path, out_dir, loop_count, seed):
    """Run the full closed loop described by a JSON config."""
    config = ExperimentConfig.from_json(
        config_path, {"out_dir": out_dir, "loop_count": loop_count, "seed": seed}
    )
    try:
        summary = run_pipeline(config)
    except StageError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    click.echo(json.dumps(summary, indent=1))


@main.command("compare-baselines")
@click.option("--scoremap", "scoremap_path", type=click.Path(exists=True), required=True)
@click.option("--policy", type=click.Path(exists=True), required=True)
@click.option("--start-x", type=int, default=0)
@click.option("--start-y", type=int, default=0)
@click.option("--budget", type=int, required=True)
@click.option("--gamma", type=float, default=0.95)
@click.option("--trials", type=int, default=10)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(), required=True)
def compare_baselines_cmd(scoremap_path, policy, start_x, start_y, budget, gamma, trials, seed, out):
    """Discounted-return comparison: policy vs lawnmower vs random walk."""
    theta, geom = load_policy(policy)
    scoremap = ScoreMap.from_csv(scoremap_path)
    rows = compare_baselines(
        scoremap, theta, GridPose(start_x, start_y), budget, gamma, trials, seed, geom
    )
    write_baseline_csv(out, rows)
    click.echo(f"wrote {out} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
