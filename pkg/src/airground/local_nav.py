"""Local waypoint navigation learned by behavioral cloning.

A small two-layer perceptron maps a ray/terrain observation to a discrete
steering distribution over 2M+1 bins. Training minimizes smoothed-label
cross-entropy plus an entropy penalty for overconfident predictions and a
quadratic weight regularizer, with DAGGER-style data aggregation against a
scripted pure-pursuit expert.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grids import (
    ContinuousPose,
    GridPose,
    SimWorld,
    StepResult,
    TraversalFeedback,
    measure_feedback,
    ray_fan,
    step_unicycle,
    wrap_angle,
)
from .scoremap import DrivabilityTable

LOGIT_CLIP = 30.0  # keeps log-probabilities finite under one-hot labels


@dataclass
class SteeringBins:
    """2M+1 steering angles uniformly spanning [-max_angle, max_angle]."""

    m: int = 7
    max_angle: float = np.pi / 4

    def __post_init__(self):
        if self.m < 1 or self.max_angle <= 0:
            raise ValueError("need m >= 1 and a positive max angle")
        self.angles = np.linspace(-self.max_angle, self.max_angle, 2 * self.m + 1)

    @property
    def n(self) -> int:
        return 2 * self.m + 1

    def nearest(self, angle: float) -> int:
        """Array index of the bin closest to a steering angle."""
        return int(np.abs(self.angles - angle).argmin())


@dataclass
class Observation:
    """Local sensing snapshot replacing the camera input.

    ray_depths and terrain_scores are indexed like the steering bins;
    goal_bearing is the waypoint bearing relative to heading in [-1, 1]
    (units of pi radians), goal_distance is normalized by the grid diagonal.
    """

    ray_depths: np.ndarray
    goal_bearing: float
    goal_distance: float
    terrain_scores: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate(
            [self.ray_depths, [self.goal_bearing, self.goal_distance], self.terrain_scores]
        )


def observation_dim(bins: SteeringBins) -> int:
    return 2 * bins.n + 2


def observe(
    world: SimWorld,
    waypoint: GridPose,
    bins: SteeringBins,
    table: DrivabilityTable,
    max_range: float = 6.0,
) -> Observation:
    """Sense the world from the robot's pose toward a waypoint."""
    robot = world.robot
    depths = ray_fan(world, robot, bins.angles, max_range)
    # terrain drivability at each ray's endpoint (blocking cell or max range)
    angles = robot.heading + bins.angles
    ex = np.clip(robot.px + depths * np.cos(angles), 0, world.width - 1e-9)
    ey = np.clip(robot.py + depths * np.sin(angles), 0, world.height - 1e-9)
    cids = world.class_map.classes[ey.astype(np.int64), ex.astype(np.int64)]
    terrain = np.array([table.get_score(c) for c in cids])
    wx, wy = waypoint.x + 0.5, waypoint.y + 0.5
    bearing = wrap_angle(np.arctan2(wy - robot.py, wx - robot.px) - robot.heading)
    diag = float(np.hypot(world.width, world.height))
    dist = min(np.hypot(wx - robot.px, wy - robot.py) / diag, 1.0)
    return Observation(depths / max_range, bearing / np.pi, dist, terrain)


def mirror_observation_vector(vec: np.ndarray, bins: SteeringBins) -> np.ndarray:
    """Left/right mirror: reverse rays and terrain, negate the bearing."""
    n = bins.n
    out = vec.copy()
    out[:n] = vec[:n][::-1]
    out[n] = -vec[n]
    out[n + 2 :] = vec[n + 2 :][::-1]
    return out


def mirror_label(label: np.ndarray) -> np.ndarray:
    return label[::-1].copy()


@dataclass
class SteeringNet:
    """Two-layer tanh perceptron producing steering logits."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @classmethod
    def init(
        cls, n_inputs: int, n_outputs: int, rng: np.random.Generator, hidden: int = 32
    ) -> "SteeringNet":
        return cls(
            rng.normal(0, 1.0 / np.sqrt(n_inputs), (hidden, n_inputs)),
            np.zeros(hidden),
            rng.normal(0, 1.0 / np.sqrt(hidden), (n_outputs, hidden)),
            np.zeros(n_outputs),
        )

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (hidden activations, clipped logits, probabilities)."""
        x = np.atleast_2d(x)
        h = np.tanh(x @ self.w1.T + self.b1)
        z = np.clip(h @ self.w2.T + self.b2, -LOGIT_CLIP, LOGIT_CLIP)
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return h, z, e / e.sum(axis=1, keepdims=True)

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def copy(self) -> "SteeringNet":
        return SteeringNet(*(p.copy() for p in self.params()))

    def to_json(self, path) -> None:
        payload = {
            "shapes": [list(p.shape) for p in self.params()],
            "weights": [p.ravel().tolist() for p in self.params()],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def from_json(cls, path) -> "SteeringNet":
        with open(path) as fh:
            payload = json.load(fh)
        parts = [
            np.array(w).reshape(shape)
            for w, shape in zip(payload["weights"], payload["shapes"])
        ]
        return cls(*parts)


def predict(net: SteeringNet, obs: Observation | np.ndarray) -> np.ndarray:
    """Steering-bin probabilities for one observation."""
    vec = obs.vector() if isinstance(obs, Observation) else np.asarray(obs)
    _, _, probs = net.forward(vec)
    return probs[0]


def smooth_labels(n_bins: int, index: int, smoothing: float) -> np.ndarray:
    """Mass 1-s on the target bin, s/2 on each neighbor; at a boundary the
    single neighbor takes the full s."""
    if not 0 <= index < n_bins:
        raise ValueError("label index outside the bin set")
    if not 0.0 <= smoothing < 1.0:
        raise ValueError("smoothing must lie in [0, 1)")
    label = np.zeros(n_bins)
    label[index] = 1.0 - smoothing
    neighbors = [j for j in (index - 1, index + 1) if 0 <= j < n_bins]
    for j in neighbors:
        label[j] += smoothing / len(neighbors)
    return label


def clone_loss(
    net: SteeringNet,
    x: np.ndarray,
    labels: np.ndarray,
    lambda1: float,
    lambda2: float,
) -> tuple[float, list[np.ndarray]]:
    """Total loss over a dataset and its gradient by backpropagation.

    loss = sum_i [ -sum_j y_ij log f_ij  -  lambda2 sum_j f_ij log f_ij ]
           + lambda1 * 0.5 * ||w||^2
    """
    if len(x) == 0:
        raise ValueError("dataset must be non-empty")
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("regularization weights must be nonnegative")
    x = np.atleast_2d(x)
    labels = np.atleast_2d(labels)
    h, z, f = net.forward(x)
    logf = np.log(f)
    pred = -np.sum(labels * logf) - lambda2 * np.sum(f * logf)
    reg = 0.5 * sum(float(np.sum(p * p)) for p in net.params())
    loss = pred + lambda1 * reg
    # d/dz of the per-sample loss
    ent_row = np.sum(f * logf, axis=1, keepdims=True)
    dz = (f - labels) - lambda2 * f * (logf - ent_row)
    dz = dz * ((z > -LOGIT_CLIP) & (z < LOGIT_CLIP))  # clip is flat outside
    dw2 = dz.T @ h + lambda1 * net.w2
    db2 = dz.sum(axis=0) + lambda1 * net.b2
    dh = dz @ net.w2
    dz1 = dh * (1.0 - h * h)
    dw1 = dz1.T @ x + lambda1 * net.w1
    db1 = dz1.sum(axis=0) + lambda1 * net.b1
    return float(loss), [dw1, db1, dw2, db2]


def sgd_epochs(
    net: SteeringNet,
    x: np.ndarray,
    labels: np.ndarray,
    rng: np.random.Generator,
    lr: float = 0.05,
    epochs: int = 20,
    batch_size: int = 64,
    lambda1: float = 1e-4,
    lambda2: float = 0.1,
) -> list[float]:
    """Mini-batch gradient descent on the mean clone loss; returns the
    per-epoch mean loss."""
    n = len(x)
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            loss, grads = clone_loss(net, x[idx], labels[idx], lambda1, lambda2)
            scale = lr / len(idx)
            for p, g in zip(net.params(), grads):
                p -= scale * g
            total += loss
        losses.append(total / n)
        if not all(np.all(np.isfinite(p)) for p in net.params()):
            raise RuntimeError("steering net diverged during training")
    return losses


def expert_action(
    world: SimWorld,
    waypoint: GridPose,
    bins: SteeringBins,
    table: DrivabilityTable,
    max_range: float = 6.0,
    safety_range: float = 2.0,
    terrain_weight: float = 0.5,
    bearing_weight: float = 0.3,
) -> int:
    """Scripted pure-pursuit expert with obstacle avoidance.

    Steers straight at the waypoint unless the pursued ray is blocked
    within the safety range; then picks the clear bin maximizing
    depth + terrain_weight * drivability - bearing_weight * |bearing error|.
    """
    obs = observe(world, waypoint, bins, table, max_range)
    depths = obs.ray_depths * max_range
    desired = np.clip(obs.goal_bearing * np.pi, -bins.max_angle, bins.max_angle)
    pursuit = bins.nearest(float(desired))
    if depths[pursuit] >= safety_range:
        return pursuit
    clear = depths >= safety_range
    utility = (
        obs.ray_depths
        + terrain_weight * obs.terrain_scores
        - bearing_weight * np.abs(bins.angles - desired)
    )
    if clear.any():
        utility = np.where(clear, utility, -np.inf)
        return int(utility.argmax())
    return int(depths.argmax())


def symmetrize_net(net: SteeringNet, bins: SteeringBins) -> SteeringNet:
    """Project weights onto the left/right mirror-equivariant subspace.

    Hidden units are paired (i, i + hidden/2); the second half becomes the
    first half composed with the input mirror, and output columns follow
    the reversed-bin convention. A net in this subspace maps mirrored
    observations to reversed probability vectors exactly, and full-batch
    training on a mirror-closed dataset keeps it there.
    """
    hidden = net.w1.shape[0]
    if hidden % 2:
        raise ValueError("symmetrization needs an even hidden width")
    half = hidden // 2
    n = bins.n
    out = net.copy()

    def mirror_in(row: np.ndarray) -> np.ndarray:
        return mirror_observation_vector(row, bins)

    for i in range(half):
        out.w1[half + i] = mirror_in(out.w1[i])
        out.b1[half + i] = out.b1[i]
        out.w2[:, half + i] = out.w2[::-1, i]
    out.b2 = 0.5 * (out.b2 + out.b2[::-1])
    return out


def _merge_feedback(parts: list[TraversalFeedback]) -> list[TraversalFeedback]:
    """Combine per-leg feedback into one record per class."""
    acc: dict[int, list] = {}
    for fb in parts:
        rec = acc.setdefault(fb.class_id, [0.0, 0, 0])
        rec[0] += fb.progress_rate * fb.steps
        rec[1] += fb.obstacle_incidents
        rec[2] += fb.steps
    return [
        TraversalFeedback(cid, prog / steps, inc, steps)
        for cid, (prog, inc, steps) in sorted(acc.items())
    ]


@dataclass
class NavLimits:
    max_steps: int = 400
    stuck_window: int = 30
    stuck_min_progress: float = 0.5
    reach_tolerance: float = 1.0
    speed: float = 1.0
    max_range: float = 6.0


def _navigate(
    controller,
    world: SimWorld,
    waypoints: list[GridPose],
    bins: SteeringBins,
    limits: NavLimits,
    class_map=None,
) -> tuple[list[StepResult], list[TraversalFeedback], str]:
    """Shared waypoint-following loop; controller(world, waypoint) -> bin."""
    if not waypoints:
        raise ValueError("waypoints must be non-empty")
    if class_map is None:
        class_map = world.class_map
    trajectory = [StepResult(world.robot.copy(), False, world.robot.cell())]
    feedback_parts: list[TraversalFeedback] = []
    outcome = "completed"
    total_steps = 0
    for waypoint in waypoints:
        wx, wy = waypoint.x + 0.5, waypoint.y + 0.5
        leg_start = len(trajectory) - 1
        history = [np.hypot(wx - world.robot.px, wy - world.robot.py)]
        stuck = False
        while history[-1] > limits.reach_tolerance:
            if total_steps >= limits.max_steps:
                stuck = True
                break
            idx = controller(world, waypoint)
            result = step_unicycle(
                world, float(bins.angles[idx]), limits.speed, bins.max_angle + 1e-9
            )
            trajectory.append(result)
            total_steps += 1
            history.append(np.hypot(wx - world.robot.px, wy - world.robot.py))
            if (
                len(history) > limits.stuck_window
                and history[-1 - limits.stuck_window] - history[-1] < limits.stuck_min_progress
            ):
                stuck = True
                break
        if len(trajectory) - 1 > leg_start:
            feedback_parts.extend(
                measure_feedback(trajectory[leg_start:], waypoint, class_map)
            )
        if stuck:
            outcome = "stuck"
            break
    return trajectory, _merge_feedback(feedback_parts), outcome


def navigate(
    net: SteeringNet,
    world: SimWorld,
    waypoints: list[GridPose],
    table: DrivabilityTable,
    bins: SteeringBins | None = None,
    limits: NavLimits | None = None,
) -> tuple[list[StepResult], list[TraversalFeedback], str]:
    """Follow waypoints with the trained net (argmax steering bin).

    Returns (trajectory, per-class feedback, outcome) where outcome is
    "completed" or "stuck" (the caller replans on "stuck").
    """
    bins = bins or SteeringBins()
    limits = limits or NavLimits()

    def controller(w, waypoint):
        obs = observe(w, waypoint, bins, table, limits.max_range)
        return int(predict(net, obs).argmax())

    return _navigate(controller, world, waypoints, bins, limits)


def navigate_expert(
    world: SimWorld,
    waypoints: list[GridPose],
    table: DrivabilityTable,
    bins: SteeringBins | None = None,
    limits: NavLimits | None = None,
) -> tuple[list[StepResult], list[TraversalFeedback], str]:
    """Waypoint following driven by the scripted expert."""
    bins = bins or SteeringBins()
    limits = limits or NavLimits()

    def controller(w, waypoint):
        return expert_action(w, waypoint, bins, table, limits.max_range)

    return _navigate(controller, world, waypoints, bins, limits)


def random_obstacle_world(
    seed: int,
    size: int = 12,
    density: float = 0.08,
    n_classes: int = 1,
) -> tuple[SimWorld, GridPose]:
    """Random scattered-obstacle world with a free start (west side) and a
    free waypoint (east side)."""
    from .grids import ClassMap

    rng = np.random.default_rng(seed)
    obstacles = rng.random((size, size)) < density
    classes = (
        np.zeros((size, size), dtype=np.int64)
        if n_classes == 1
        else rng.integers(0, n_classes, (size, size))
    )
    sy = int(rng.integers(1, size - 1))
    gy = int(rng.integers(1, size - 1))
    # keep the start neighborhood and the goal cell clear
    obstacles[sy - 1 : sy + 2, 0:3] = False
    obstacles[gy - 1 : gy + 2, size - 3 : size] = False
    start = ContinuousPose(1.5, sy + 0.5, 0.0)
    world = SimWorld(ClassMap(classes, max(n_classes, 1)), obstacles, start)
    return world, GridPose(size - 2, gy)


@dataclass
class CloneConfig:
    dagger_rounds: int = 5
    episodes_per_round: int = 40
    epochs: int = 20
    lr: float = 0.05
    batch_size: int = 64
    smoothing: float = 0.2
    lambda1: float = 1e-4
    lambda2: float = 0.1
    seed: int = 0
    hidden: int = 32
    eval_worlds: int = 20
    max_steps: int = 150


@dataclass
class CloneResult:
    net: SteeringNet
    success_rates: list
    dataset_sizes: list
    dataset_x: np.ndarray | None = None
    dataset_y: np.ndarray | None = None


def save_dataset_csv(path, x: np.ndarray, labels: np.ndarray) -> None:
    """One row per pair: observation components then the label values."""
    np.savetxt(path, np.hstack([x, labels]), fmt="%.12g", delimiter=",")


def load_dataset_csv(path, n_labels: int) -> tuple[np.ndarray, np.ndarray]:
    data = np.atleast_2d(np.loadtxt(path, delimiter=","))
    return data[:, :-n_labels], data[:, -n_labels:]


def _run_episode(
    controller,
    record_expert: bool,
    world: SimWorld,
    waypoint: GridPose,
    table: DrivabilityTable,
    bins: SteeringBins,
    limits: NavLimits,
    config: CloneConfig,
) -> tuple[list, list, bool, int]:
    """Drive one episode; returns (obs vectors, labels, success, collisions)."""
    xs, ys = [], []
    collisions = 0
    wx, wy = waypoint.x + 0.5, waypoint.y + 0.5
    history = [np.hypot(wx - world.robot.px, wy - world.robot.py)]
    while history[-1] > limits.reach_tolerance and len(history) <= config.max_steps:
        obs = observe(world, waypoint, bins, table, limits.max_range)
        expert_idx = expert_action(world, waypoint, bins, table, limits.max_range)
        xs.append(obs.vector())
        ys.append(smooth_labels(bins.n, expert_idx, config.smoothing))
        act_idx = expert_idx if record_expert else controller(obs)
        result = step_unicycle(world, float(bins.angles[act_idx]), limits.speed, bins.max_angle + 1e-9)
        collisions += int(result.collided)
        history.append(np.hypot(wx - world.robot.px, wy - world.robot.py))
        if (
            len(history) > limits.stuck_window
            and history[-1 - limits.stuck_window] - history[-1] < limits.stuck_min_progress
        ):
            break
    success = history[-1] <= limits.reach_tolerance
    return xs, ys, success, collisions


def evaluate_net(
    net: SteeringNet,
    world_seeds: list[int],
    table: DrivabilityTable,
    bins: SteeringBins,
    limits: NavLimits,
    world_gen=random_obstacle_world,
) -> tuple[float, float]:
    """(success rate, zero-collision rate) of argmax navigation over worlds."""
    successes = 0
    clean = 0
    for seed in world_seeds:
        world, waypoint = world_gen(seed)
        trajectory, _, outcome = navigate(
            net, world, [waypoint], table, bins, limits
        )
        collided = any(rec.collided for rec in trajectory)
        successes += int(outcome == "completed")
        clean += int(not collided)
    return successes / len(world_seeds), clean / len(world_seeds)


def train_clone(
    world_gen,
    config: CloneConfig,
    table: DrivabilityTable | None = None,
    bins: SteeringBins | None = None,
    limits: NavLimits | None = None,
) -> CloneResult:
    """DAGGER loop: round 0 collects expert-driven episodes, later rounds
    run the current net and relabel visited states with the expert, then
    retrain on the aggregated dataset."""
    if config.dagger_rounds < 1 or config.episodes_per_round < 1:
        raise ValueError("clone config entries must be positive")
    table = table or DrivabilityTable()
    bins = bins or SteeringBins()
    limits = limits or NavLimits(max_steps=config.max_steps)
    rng = np.random.default_rng(config.seed)
    net = SteeringNet.init(observation_dim(bins), bins.n, rng, config.hidden)
    xs_all: list = []
    ys_all: list = []
    success_rates = []
    dataset_sizes = []
    episode_seed = config.seed * 100003 + 1
    eval_seeds = [config.seed * 700001 + 17 + i for i in range(config.eval_worlds)]
    for rnd in range(config.dagger_rounds):
        for _ in range(config.episodes_per_round):
            world, waypoint = world_gen(episode_seed)
            episode_seed += 1
            controller = lambda obs: int(predict(net, obs).argmax())
            xs, ys, _, _ = _run_episode(
                controller, rnd == 0, world, waypoint, table, bins, limits, config
            )
            xs_all.extend(xs)
            ys_all.extend(ys)
        x = np.array(xs_all)
        y = np.array(ys_all)
        sgd_epochs(
            net, x, y, rng, config.lr, config.epochs, config.batch_size,
            config.lambda1, config.lambda2,
        )
        success, _ = evaluate_net(net, eval_seeds, table, bins, limits, world_gen)
        success_rates.append(success)
        dataset_sizes.append(len(xs_all))
    return CloneResult(net, success_rates, dataset_sizes, np.array(xs_all), np.array(ys_all))
