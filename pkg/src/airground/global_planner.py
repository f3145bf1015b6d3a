"""Policy-gradient coverage planner over a scoremap.

A softmax policy over {north, south, east, west} acts on multi-resolution
egocentric features of the remaining (not yet collected) score. Training
is plain REINFORCE with reward-to-go and the observed average reward as a
constant baseline. Rewards use coverage semantics: a cell's score is
collected once, on entry, and then zeroed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grids import GridPose, ScoreMap

ACTIONS = ("north", "south", "east", "west")
ACTION_DELTAS = ((0, 1), (0, -1), (1, 0), (-1, 0))


@dataclass
class FeatureGeometry:
    """Egocentric ring/octant partition of the surrounding grid.

    Rings of widths ring_widths (inner to outer) are split into n_octants
    angular sectors; every cell offset within the outer radius falls in
    exactly one (ring, octant) bucket. Features are bucket sums of the
    remaining score divided by the bucket's geometric cell count, plus a
    trailing bias of 1.
    """

    ring_widths: tuple = (1, 2, 4, 8)
    n_octants: int = 8
    dx: np.ndarray = field(init=False, repr=False)
    dy: np.ndarray = field(init=False, repr=False)
    bucket: np.ndarray = field(init=False, repr=False)
    bucket_sizes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        radii = np.cumsum(self.ring_widths)
        outer = int(radii[-1])
        ys, xs = np.mgrid[-outer : outer + 1, -outer : outer + 1]
        # Chebyshev radius: rings are square annuli, so every (ring, octant)
        # bucket is nonempty
        r = np.maximum(np.abs(xs), np.abs(ys))
        inside = (r > 0) & (r <= outer)
        dx = xs[inside].ravel()
        dy = ys[inside].ravel()
        r = r[inside].ravel()
        ring = np.searchsorted(radii, r - 0.5)
        sector = np.floor((np.arctan2(dy, dx) % (2 * np.pi)) / (2 * np.pi / self.n_octants))
        sector = np.minimum(sector.astype(np.int64), self.n_octants - 1)
        self.dx = dx
        self.dy = dy
        self.bucket = ring * self.n_octants + sector
        self.bucket_sizes = np.bincount(self.bucket, minlength=self.n_buckets).astype(np.float64)

    @property
    def n_buckets(self) -> int:
        return len(self.ring_widths) * self.n_octants

    @property
    def n_features(self) -> int:
        return self.n_buckets + 1


@dataclass
class PlannerState:
    """Planner-side view of the coverage problem at one time step."""

    pose: GridPose
    remaining: np.ndarray
    t: int
    horizon: int


def extract_features(state: PlannerState, geom: FeatureGeometry) -> np.ndarray:
    """Ring/octant sums of the remaining score around the pose, bias last."""
    h, w = state.remaining.shape
    xs = state.pose.x + geom.dx
    ys = state.pose.y + geom.dy
    valid = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    sums = np.bincount(
        geom.bucket[valid],
        weights=state.remaining[ys[valid], xs[valid]],
        minlength=geom.n_buckets,
    )
    phi = np.empty(geom.n_features)
    phi[:-1] = sums / geom.bucket_sizes
    phi[-1] = 1.0
    return phi


def feasible_actions(pose: GridPose, width: int, height: int) -> np.ndarray:
    """Boolean mask of actions that stay on the map."""
    mask = np.empty(4, dtype=bool)
    for a, (dx, dy) in enumerate(ACTION_DELTAS):
        mask[a] = 0 <= pose.x + dx < width and 0 <= pose.y + dy < height
    return mask


def _masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    z = np.where(mask, logits, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def action_distribution(theta: np.ndarray, phi: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """softmax(theta @ phi) with off-map actions masked to probability 0."""
    if not mask.any():
        raise ValueError("no feasible action (degenerate grid)")
    return _masked_softmax(theta @ phi, mask)


@dataclass
class Rollout:
    """One executed trajectory with everything the gradient needs."""

    features: np.ndarray | None  # (H, F)
    masks: np.ndarray | None  # (H, 4)
    actions: np.ndarray | None  # (H,)
    rewards: np.ndarray  # (H,)
    path: list  # H + 1 GridPoses, start first
    total_reward: float


def rollout(
    theta: np.ndarray,
    scoremap: ScoreMap,
    start: GridPose,
    horizon: int,
    rng: np.random.Generator | None = None,
    geom: FeatureGeometry | None = None,
    greedy: bool = False,
) -> Rollout:
    """Run the policy for `horizon` steps under coverage semantics.

    greedy=True takes the argmax action (deterministic, no rng needed);
    otherwise actions are sampled from the policy distribution.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if geom is None:
        geom = FeatureGeometry()
    if not greedy and rng is None:
        rng = np.random.default_rng(0)
    remaining = scoremap.scores.copy()
    h, w = remaining.shape
    x, y = start.x, start.y
    feats = np.empty((horizon, geom.n_features))
    masks = np.empty((horizon, 4), dtype=bool)
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    path = [GridPose(x, y)]
    for t in range(horizon):
        state = PlannerState(GridPose(x, y), remaining, t, horizon)
        phi = extract_features(state, geom)
        mask = feasible_actions(state.pose, w, h)
        probs = action_distribution(theta, phi, mask)
        if greedy:
            a = int(probs.argmax())
        else:
            a = int(rng.choice(4, p=probs))
        dx, dy = ACTION_DELTAS[a]
        x, y = x + dx, y + dy
        feats[t] = phi
        masks[t] = mask
        actions[t] = a
        rewards[t] = remaining[y, x]
        remaining[y, x] = 0.0
        path.append(GridPose(x, y))
    return Rollout(feats, masks, actions, rewards, path, float(rewards.sum()))


def reward_to_go(rewards: np.ndarray, gamma: float = 1.0) -> np.ndarray:
    """rtg_t = sum_{j >= t} gamma^(j - t) r_j."""
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def policy_gradient(
    rollouts: list[Rollout], theta: np.ndarray, gamma: float = 1.0
) -> np.ndarray:
    """REINFORCE gradient with the observed average reward as baseline.

    grad = (1/m) sum_i sum_t grad log pi(a_t | s_t) * (reward-to-go_t - b)

    gamma < 1 discounts the reward-to-go (and the baseline), which targets
    the discounted objective instead of the plain total.
    """
    if not rollouts:
        raise ValueError("need at least one rollout")
    returns = [float(reward_to_go(r.rewards, gamma)[0]) for r in rollouts]
    baseline = float(np.mean(returns))
    grad = np.zeros_like(theta)
    for ro in rollouts:
        if ro.features is None:
            raise ValueError("rollout lacks policy features")
        if ro.features.shape[1] != theta.shape[1]:
            raise ValueError("feature/parameter dimension mismatch")
        probs = _masked_softmax(ro.features @ theta.T, ro.masks)
        adv = reward_to_go(ro.rewards, gamma) - baseline
        coeff = -probs
        coeff[np.arange(len(ro.actions)), ro.actions] += 1.0
        grad += (coeff * adv[:, None]).T @ ro.features
    return grad / len(rollouts)


@dataclass
class PlannerConfig:
    iterations: int = 300
    m: int = 32  # sampled rollouts per gradient estimate
    horizon: int = 100
    learning_rate: float = 0.01
    seed: int = 0
    gamma: float = 1.0  # 1.0 = plain total reward; < 1 trains the discounted objective


@dataclass
class TrainResult:
    theta: np.ndarray
    mean_rewards: list
    baselines: list


def train(
    scoremap: ScoreMap,
    start: GridPose,
    config: PlannerConfig,
    geom: FeatureGeometry | None = None,
) -> TrainResult:
    """Vanilla gradient ascent on the REINFORCE objective."""
    if min(config.iterations, config.m, config.horizon) < 1 or config.learning_rate <= 0:
        raise ValueError("planner config entries must be positive")
    if geom is None:
        geom = FeatureGeometry()
    rng = np.random.default_rng(config.seed)
    theta = np.zeros((4, geom.n_features))
    mean_rewards = []
    baselines = []
    for it in range(config.iterations):
        rollouts = [
            rollout(theta, scoremap, start, config.horizon, rng, geom) for _ in range(config.m)
        ]
        grad = policy_gradient(rollouts, theta, config.gamma)
        theta = theta + config.learning_rate * grad
        if not np.all(np.isfinite(theta)):
            raise RuntimeError(f"policy parameters diverged at iteration {it}")
        mean_rewards.append(float(np.mean([r.total_reward for r in rollouts])))
        baselines.append(mean_rewards[-1])
    return TrainResult(theta, mean_rewards, baselines)


def plan_waypoints(
    theta: np.ndarray,
    scoremap: ScoreMap,
    start: GridPose,
    budget: int,
    stride: int = 5,
    geom: FeatureGeometry | None = None,
) -> list[GridPose]:
    """Greedy rollout of length `budget`, downsampled every `stride` cells;
    the final cell is always included."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if budget == 0:
        return [start]
    ro = rollout(theta, scoremap, start, budget, geom=geom, greedy=True)
    waypoints = ro.path[::stride]
    if waypoints[-1] != ro.path[-1]:
        waypoints.append(ro.path[-1])
    return waypoints


def greedy_rollout(
    theta: np.ndarray,
    scoremap: ScoreMap,
    start: GridPose,
    budget: int,
    geom: FeatureGeometry | None = None,
) -> Rollout:
    return rollout(theta, scoremap, start, budget, geom=geom, greedy=True)


def baseline_boustrophedon(scoremap: ScoreMap, start: GridPose, budget: int) -> Rollout:
    """Lawnmower sweep truncated to `budget` steps, same coverage semantics.

    East across the row, one step north, west across the row, and so on;
    the vertical direction flips when a sweep reaches the top or bottom.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    remaining = scoremap.scores.copy()
    h, w = remaining.shape
    x, y = start.x, start.y
    horiz, vert = 1, 1
    rewards = np.empty(budget)
    path = [GridPose(x, y)]
    for t in range(budget):
        if 0 <= x + horiz < w:
            x += horiz
        elif 0 <= y + vert < h:
            y += vert
            horiz = -horiz
        else:
            vert = -vert
            y += vert
            horiz = -horiz
        rewards[t] = remaining[y, x]
        remaining[y, x] = 0.0
        path.append(GridPose(x, y))
    return Rollout(None, None, None, rewards, path, float(rewards.sum()))


def baseline_random_walk(
    scoremap: ScoreMap, start: GridPose, budget: int, rng: np.random.Generator
) -> Rollout:
    """Uniform random feasible moves; equals the zero-parameter policy."""
    geom = FeatureGeometry((1, 1), 4)  # tiny geometry, features unused by theta = 0
    theta = np.zeros((4, geom.n_features))
    return rollout(theta, scoremap, start, budget, rng, geom)


def discounted_return(ro: Rollout, gamma: float) -> float:
    """sum_t gamma^t r_t."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    return float(np.sum(ro.rewards * gamma ** np.arange(len(ro.rewards))))


def save_policy(path, theta: np.ndarray, geom: FeatureGeometry) -> None:
    payload = {
        "actions": list(ACTIONS),
        "feature_config": {
            "ring_widths": list(geom.ring_widths),
            "n_octants": geom.n_octants,
        },
        "theta": np.asarray(theta).ravel().tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def load_policy(path) -> tuple[np.ndarray, FeatureGeometry]:
    with open(path) as fh:
        payload = json.load(fh)
    geom = FeatureGeometry(
        tuple(payload["feature_config"]["ring_widths"]),
        payload["feature_config"]["n_octants"],
    )
    theta = np.array(payload["theta"]).reshape(len(payload["actions"]), geom.n_features)
    return theta, geom


def random_clustered_scoremap(
    width: int, height: int, n_blobs: int, seed: int, peak: float = 1.0
) -> ScoreMap:
    """Synthetic scoremap made of a few Gaussian score blobs; handy for
    benchmarks and demos."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    scores = np.zeros((height, width))
    for _ in range(n_blobs):
        cx = rng.uniform(0, width)
        cy = rng.uniform(0, height)
        sigma = rng.uniform(1.5, max(2.0, min(width, height) / 6))
        scores += peak * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma**2))
    return ScoreMap(scores)
