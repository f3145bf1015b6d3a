"""Core spatial types and the deterministic grid-world simulator.

Conventions: grids are numpy arrays indexed [y, x] with x growing east and
y growing north. Continuous positions are measured in cell units, so the
cell containing (px, py) is (floor(px), floor(py)). Headings are radians in
[-pi, pi) with 0 pointing east.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .pnm import read_pgm, write_pgm


def wrap_angle(a: float) -> float:
    """Normalize an angle to [-pi, pi)."""
    return float((a + np.pi) % (2.0 * np.pi) - np.pi)


@dataclass(frozen=True)
class GridPose:
    """Integer cell coordinates."""

    x: int
    y: int


@dataclass
class ContinuousPose:
    """Sub-cell robot pose used by the unicycle model."""

    px: float
    py: float
    heading: float

    def __post_init__(self):
        self.heading = wrap_angle(self.heading)

    def cell(self) -> GridPose:
        return GridPose(int(np.floor(self.px)), int(np.floor(self.py)))

    def copy(self) -> "ContinuousPose":
        return ContinuousPose(self.px, self.py, self.heading)


@dataclass
class ScoreMap:
    """Grid of nonnegative per-cell scores, shape (height, width)."""

    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2:
            raise ValueError("scores must be a 2-D array")
        if np.any(self.scores < 0) or not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite and nonnegative")

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    def total(self) -> float:
        return float(self.scores.sum())

    def copy(self) -> "ScoreMap":
        return ScoreMap(self.scores.copy())

    def to_csv(self, path) -> None:
        np.savetxt(path, self.scores, fmt="%.10g", delimiter=",")

    @classmethod
    def from_csv(cls, path) -> "ScoreMap":
        return cls(np.atleast_2d(np.loadtxt(path, delimiter=",")))

    def to_pgm(self, path) -> None:
        # visualization convenience: score clipped to [0,1] and scaled to 255
        gray = np.clip(self.scores, 0.0, 1.0) * 255.0
        write_pgm(path, np.rint(gray).astype(np.int64))


@dataclass
class ClassMap:
    """Grid of texture-class ids in [0, num_classes)."""

    classes: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.classes = np.asarray(self.classes, dtype=np.int64)
        if self.classes.ndim != 2:
            raise ValueError("classes must be a 2-D array")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if self.classes.min() < 0 or self.classes.max() >= self.num_classes:
            raise ValueError("class ids must lie in [0, num_classes)")

    @property
    def width(self) -> int:
        return self.classes.shape[1]

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    def to_pgm(self, path) -> None:
        # one gray level per class id
        write_pgm(path, self.classes, maxval=max(255, self.num_classes - 1))

    @classmethod
    def from_pgm(cls, path, num_classes: int | None = None) -> "ClassMap":
        grid = read_pgm(path)
        if num_classes is None:
            num_classes = int(grid.max()) + 1
        return cls(grid, num_classes)


def obstacles_to_pgm(path, obstacles: np.ndarray) -> None:
    """Persist a boolean obstacle grid: 0 = free, 255 = occupied."""
    write_pgm(path, np.where(np.asarray(obstacles, dtype=bool), 255, 0))


def obstacles_from_pgm(path) -> np.ndarray:
    return read_pgm(path) > 0


@dataclass
class SimWorld:
    """Occupancy + terrain grid with a unicycle robot pose.

    A value type: use copy() to branch simulations. Steps mutate the
    instance they are applied to and nothing else.
    """

    class_map: ClassMap
    obstacles: np.ndarray
    robot: ContinuousPose
    step_count: int = 0

    def __post_init__(self):
        self.obstacles = np.asarray(self.obstacles, dtype=bool)
        if self.obstacles.shape != self.class_map.classes.shape:
            raise ValueError("obstacle grid shape must match class map shape")

    @property
    def width(self) -> int:
        return self.class_map.width

    @property
    def height(self) -> int:
        return self.class_map.height

    def in_bounds(self, px: float, py: float) -> bool:
        return 0.0 <= px < self.width and 0.0 <= py < self.height

    def is_obstacle(self, cell: GridPose) -> bool:
        return bool(self.obstacles[cell.y, cell.x])

    def copy(self) -> "SimWorld":
        return SimWorld(
            ClassMap(self.class_map.classes.copy(), self.class_map.num_classes),
            self.obstacles.copy(),
            self.robot.copy(),
            self.step_count,
        )


@dataclass
class StepResult:
    """Outcome of a single simulator step.

    cell_entered is the cell the robot moved into, or for a blocked step
    the cell it attempted to enter (clamped to the grid). Attributing
    collisions to the attempted cell is what lets traversal feedback blame
    the terrain class that actually blocked the robot.
    """

    pose: ContinuousPose
    collided: bool
    cell_entered: GridPose


@dataclass
class TraversalFeedback:
    """Per-terrain-class summary of one traversal."""

    class_id: int
    progress_rate: float
    obstacle_incidents: int
    steps: int


def step_unicycle(
    world: SimWorld,
    steering: float,
    speed: float,
    max_steering: float = np.pi / 2,
) -> StepResult:
    """Advance the robot one step: turn by `steering`, then move `speed` cells.

    If the target cell is an obstacle or out of bounds the position is left
    unchanged and the result is flagged as a collision; the heading update
    still applies.
    """
    if abs(steering) > max_steering + 1e-12:
        raise ValueError(f"steering {steering} exceeds max {max_steering}")
    if speed <= 0:
        raise ValueError("speed must be positive")
    robot = world.robot
    heading = wrap_angle(robot.heading + steering)
    nx = robot.px + speed * np.cos(heading)
    ny = robot.py + speed * np.sin(heading)
    target = GridPose(
        int(np.clip(np.floor(nx), 0, world.width - 1)),
        int(np.clip(np.floor(ny), 0, world.height - 1)),
    )
    blocked = not world.in_bounds(nx, ny) or world.is_obstacle(target)
    robot.heading = heading
    if not blocked:
        robot.px = float(nx)
        robot.py = float(ny)
    world.step_count += 1
    return StepResult(robot.copy(), blocked, target)


RAY_STEP = 0.1  # ray-march resolution in cells


def ray_cast(
    world: SimWorld,
    origin: ContinuousPose,
    angle_offset: float,
    max_range: float,
    step: float = RAY_STEP,
) -> float:
    """Distance along a ray to the nearest obstacle or grid boundary.

    Fixed-step ray marching: the result overshoots the true intersection by
    less than `step`. Returns max_range when nothing blocks the ray.
    """
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    if not world.in_bounds(origin.px, origin.py) or world.is_obstacle(origin.cell()):
        raise ValueError("ray origin lies inside an obstacle or off the grid")
    angle = origin.heading + angle_offset
    dx, dy = np.cos(angle), np.sin(angle)
    t = step
    while t <= max_range + 1e-12:
        px, py = origin.px + t * dx, origin.py + t * dy
        if not world.in_bounds(px, py):
            return min(t, max_range)
        if world.obstacles[int(py), int(px)]:
            return min(t, max_range)
        t += step
    return max_range


def ray_fan(
    world: SimWorld,
    origin: ContinuousPose,
    angle_offsets: np.ndarray,
    max_range: float,
    step: float = RAY_STEP,
) -> np.ndarray:
    """Vectorized ray_cast over many angle offsets (same marching scheme)."""
    if not world.in_bounds(origin.px, origin.py) or world.is_obstacle(origin.cell()):
        raise ValueError("ray origin lies inside an obstacle or off the grid")
    angles = origin.heading + np.asarray(angle_offsets, dtype=np.float64)
    ts = np.arange(step, max_range + step / 2, step)
    px = origin.px + ts[None, :] * np.cos(angles)[:, None]
    py = origin.py + ts[None, :] * np.sin(angles)[:, None]
    oob = (px < 0) | (px >= world.width) | (py < 0) | (py >= world.height)
    cx = np.clip(px.astype(np.int64), 0, world.width - 1)
    cy = np.clip(py.astype(np.int64), 0, world.height - 1)
    hit = oob | world.obstacles[cy, cx]
    dists = np.full(len(angles), max_range)
    any_hit = hit.any(axis=1)
    first = hit.argmax(axis=1)
    dists[any_hit] = np.minimum(ts[first[any_hit]], max_range)
    return dists


def measure_feedback(
    trajectory: list[StepResult],
    goal: GridPose,
    class_map: ClassMap,
) -> list[TraversalFeedback]:
    """Summarize a trajectory per terrain class touched.

    trajectory[0] is the initial state record; entries 1..n are steps.
    Progress toward the goal on each step is attributed to the class of the
    cell entered (or attempted) on that step.
    """
    if not trajectory:
        raise ValueError("trajectory must be non-empty")
    gx, gy = goal.x + 0.5, goal.y + 0.5
    progress: dict[int, float] = {}
    incidents: dict[int, int] = {}
    steps: dict[int, int] = {}
    prev = trajectory[0].pose
    for rec in trajectory[1:]:
        cid = int(class_map.classes[rec.cell_entered.y, rec.cell_entered.x])
        d_prev = np.hypot(prev.px - gx, prev.py - gy)
        d_now = np.hypot(rec.pose.px - gx, rec.pose.py - gy)
        progress[cid] = progress.get(cid, 0.0) + (d_prev - d_now)
        steps[cid] = steps.get(cid, 0) + 1
        incidents[cid] = incidents.get(cid, 0) + int(rec.collided)
        prev = rec.pose
    return [
        TraversalFeedback(cid, progress[cid] / steps[cid], incidents[cid], steps[cid])
        for cid in sorted(steps)
    ]


TRAJECTORY_HEADER = ["step", "px", "py", "heading", "collided", "cell_x", "cell_y", "class_id"]


def save_trajectory_csv(path, trajectory: list[StepResult], class_map: ClassMap) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for i, rec in enumerate(trajectory):
            cid = int(class_map.classes[rec.cell_entered.y, rec.cell_entered.x])
            writer.writerow(
                [
                    i,
                    f"{rec.pose.px:.12g}",
                    f"{rec.pose.py:.12g}",
                    f"{rec.pose.heading:.12g}",
                    int(rec.collided),
                    rec.cell_entered.x,
                    rec.cell_entered.y,
                    cid,
                ]
            )


def load_trajectory_csv(path) -> list[StepResult]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(
                StepResult(
                    ContinuousPose(float(row["px"]), float(row["py"]), float(row["heading"])),
                    bool(int(row["collided"])),
                    GridPose(int(row["cell_x"]), int(row["cell_y"])),
                )
            )
    return out
