import numpy as np
import pytest

from airground.grids import GridPose
from airground.local_nav import (
    CloneConfig,
    NavLimits,
    Observation,
    SteeringBins,
    SteeringNet,
    clone_loss,
    expert_action,
    load_dataset_csv,
    mirror_label,
    mirror_observation_vector,
    navigate,
    navigate_expert,
    observation_dim,
    observe,
    predict,
    save_dataset_csv,
    sgd_epochs,
    smooth_labels,
    symmetrize_net,
    train_clone,
    random_obstacle_world,
)
from airground.scoremap import ClassDrivability, DrivabilityTable
from conftest import make_world


def test_steering_bins():
    bins = SteeringBins(m=3, max_angle=0.6)
    assert bins.n == 7
    assert bins.angles[0] == pytest.approx(-0.6)
    assert bins.angles[-1] == pytest.approx(0.6)
    assert bins.angles[3] == pytest.approx(0.0)
    assert bins.nearest(0.05) == 3
    assert bins.nearest(-10.0) == 0
    with pytest.raises(ValueError):
        SteeringBins(m=0)
    with pytest.raises(ValueError):
        SteeringBins(max_angle=0.0)


def test_observation_vector_layout():
    bins = SteeringBins(m=2)
    obs = Observation(np.arange(5.0), 0.25, 0.5, np.arange(5.0) + 10)
    vec = obs.vector()
    assert len(vec) == observation_dim(bins) == 12
    assert vec[5] == 0.25 and vec[6] == 0.5
    assert vec[7] == 10.0


def test_observe_empty_world():
    world = make_world(size=20, robot=(10.0, 10.0, 0.0))
    bins = SteeringBins()
    obs = observe(world, GridPose(14, 9), bins, DrivabilityTable(), max_range=5.0)
    assert np.allclose(obs.ray_depths, 1.0)  # nothing within range
    # waypoint center (14.5, 9.5) from (10, 10): bearing slightly below the x axis
    expected = np.arctan2(9.5 - 10.0, 14.5 - 10.0)
    assert obs.goal_bearing == pytest.approx(expected / np.pi)
    assert obs.goal_distance == pytest.approx(
        np.hypot(4.5, -0.5) / np.hypot(20, 20)
    )
    assert np.allclose(obs.terrain_scores, 0.5)  # prior everywhere


def test_observe_wall_shortens_center_ray():
    world = make_world(size=20, obstacles=[(13, y) for y in range(20)], robot=(10.5, 10.5, 0.0))
    obs = observe(world, GridPose(18, 10), SteeringBins(), DrivabilityTable(), max_range=6.0)
    center = SteeringBins().m
    assert obs.ray_depths[center] * 6.0 == pytest.approx(2.5, abs=0.1 + 1e-9)


def test_observe_reads_terrain_class_scores():
    classes = np.zeros((20, 20), dtype=np.int64)
    classes[:, 13:] = 1
    world = make_world(size=20, classes=classes, n_classes=2, robot=(10.5, 10.5, 0.0))
    table = DrivabilityTable({0: ClassDrivability(0.9), 1: ClassDrivability(0.2)})
    obs = observe(world, GridPose(18, 10), SteeringBins(), table, max_range=6.0)
    center = SteeringBins().m
    # center ray ends in class-1 territory (x = 10.5 + 6 > 13)
    assert obs.terrain_scores[center] == pytest.approx(0.2)


def test_mirror_observation_is_involution(rng):
    bins = SteeringBins()
    vec = rng.random(observation_dim(bins))
    mirrored = mirror_observation_vector(vec, bins)
    assert np.allclose(mirror_observation_vector(mirrored, bins), vec)
    n = bins.n
    assert np.allclose(mirrored[:n], vec[:n][::-1])
    assert mirrored[n] == -vec[n]
    assert mirrored[n + 1] == vec[n + 1]
    assert np.allclose(mirror_label(np.arange(5.0)), [4, 3, 2, 1, 0])


def test_net_forward_and_json_round_trip(tmp_path, rng):
    bins = SteeringBins()
    net = SteeringNet.init(observation_dim(bins), bins.n, rng, hidden=16)
    x = rng.random((5, observation_dim(bins)))
    _, _, probs = net.forward(x)
    assert probs.shape == (5, bins.n)
    assert np.allclose(probs.sum(axis=1), 1.0)
    assert np.all(probs > 0)
    path = tmp_path / "net.json"
    net.to_json(path)
    loaded = SteeringNet.from_json(path)
    for p, q in zip(net.params(), loaded.params()):
        assert np.allclose(p, q)
    assert np.allclose(predict(net, x[0]), predict(loaded, x[0]))


def test_smooth_labels():
    label = smooth_labels(5, 2, 0.2)
    assert np.allclose(label, [0.0, 0.1, 0.8, 0.1, 0.0])
    # boundary: the single neighbor takes the full smoothing mass
    label = smooth_labels(5, 0, 0.2)
    assert np.allclose(label, [0.8, 0.2, 0.0, 0.0, 0.0])
    assert np.allclose(smooth_labels(5, 1, 0.0), [0, 1, 0, 0, 0])
    with pytest.raises(ValueError):
        smooth_labels(5, 5, 0.1)
    with pytest.raises(ValueError):
        smooth_labels(5, 2, 1.0)


def test_clone_loss_matches_finite_differences():
    rng = np.random.default_rng(8)
    bins = SteeringBins(m=2)
    dim = observation_dim(bins)
    net = SteeringNet.init(dim, bins.n, rng, hidden=6)
    x = rng.random((7, dim))
    labels = np.array([smooth_labels(bins.n, int(i), 0.2) for i in rng.integers(0, bins.n, 7)])
    lambda1, lambda2 = 1e-3, 0.1
    _, grads = clone_loss(net, x, labels, lambda1, lambda2)
    eps = 1e-6
    for p, g in zip(net.params(), grads):
        flat = p.ravel()
        for idx in range(0, flat.size, max(1, flat.size // 20)):
            orig = flat[idx]
            flat[idx] = orig + eps
            up, _ = clone_loss(net, x, labels, lambda1, lambda2)
            flat[idx] = orig - eps
            dn, _ = clone_loss(net, x, labels, lambda1, lambda2)
            flat[idx] = orig
            fd = (up - dn) / (2 * eps)
            assert g.ravel()[idx] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_clone_loss_validation():
    bins = SteeringBins(m=2)
    net = SteeringNet.init(observation_dim(bins), bins.n, np.random.default_rng(0))
    with pytest.raises(ValueError):
        clone_loss(net, np.empty((0, observation_dim(bins))), np.empty((0, bins.n)), 0.0, 0.0)
    x = np.zeros((1, observation_dim(bins)))
    y = np.zeros((1, bins.n))
    with pytest.raises(ValueError):
        clone_loss(net, x, y, -1.0, 0.0)


def test_sgd_reduces_loss(rng):
    bins = SteeringBins(m=2)
    dim = observation_dim(bins)
    net = SteeringNet.init(dim, bins.n, rng, hidden=12)
    x = rng.random((80, dim))
    # learnable rule: label tracks the sign of one input coordinate
    idx = np.where(x[:, 0] > 0.5, bins.n - 1, 0)
    labels = np.array([smooth_labels(bins.n, int(i), 0.1) for i in idx])
    losses = sgd_epochs(net, x, labels, rng, lr=0.1, epochs=30, batch_size=16)
    assert losses[-1] < 0.6 * losses[0]


def test_expert_pursues_open_waypoint():
    world = make_world(size=20, robot=(5.5, 10.5, 0.0))
    bins = SteeringBins()
    idx = expert_action(world, GridPose(15, 10), bins, DrivabilityTable())
    assert idx == bins.nearest(np.arctan2(0.0, 10.0))  # straight ahead


def test_expert_avoids_blocked_ray():
    world = make_world(
        size=20, obstacles=[(7, 9), (7, 10), (7, 11)], robot=(5.5, 10.5, 0.0)
    )
    bins = SteeringBins()
    idx = expert_action(world, GridPose(15, 10), bins, DrivabilityTable())
    pursuit = bins.nearest(0.0)
    assert idx != pursuit
    depths = observe(world, GridPose(15, 10), bins, DrivabilityTable()).ray_depths * 6.0
    assert depths[idx] >= 2.0  # chosen bin is clear past the safety range


def test_symmetrize_net_mirror_equivariance(rng):
    bins = SteeringBins()
    net = symmetrize_net(
        SteeringNet.init(observation_dim(bins), bins.n, rng, hidden=16), bins
    )
    for _ in range(5):
        vec = rng.random(observation_dim(bins)) * 2 - 1
        p = predict(net, vec)
        pm = predict(net, mirror_observation_vector(vec, bins))
        assert np.allclose(pm, p[::-1], atol=1e-12)


def test_navigate_expert_reaches_waypoints():
    world = make_world(size=16, obstacles=[(8, 8), (8, 9)], robot=(2.5, 8.5, 0.0))
    trajectory, feedbacks, outcome = navigate_expert(
        world, [GridPose(13, 8)], DrivabilityTable()
    )
    assert outcome == "completed"
    final = trajectory[-1].pose
    assert np.hypot(13.5 - final.px, 8.5 - final.py) <= 1.0
    assert sum(fb.steps for fb in feedbacks) == len(trajectory) - 1


def test_navigate_expert_reports_stuck():
    # waypoint sealed inside a box
    box = [(10, y) for y in range(7, 11)] + [(14, y) for y in range(7, 11)]
    box += [(x, 7) for x in range(10, 15)] + [(x, 10) for x in range(10, 15)]
    world = make_world(size=18, obstacles=box, robot=(3.5, 8.5, 0.0))
    _, _, outcome = navigate_expert(
        world, [GridPose(12, 8)], DrivabilityTable(), limits=NavLimits(max_steps=200)
    )
    assert outcome == "stuck"


def test_navigate_requires_waypoints():
    world = make_world()
    bins = SteeringBins()
    net = SteeringNet.init(observation_dim(bins), bins.n, np.random.default_rng(0))
    with pytest.raises(ValueError):
        navigate(net, world, [], DrivabilityTable(), bins)


def test_random_obstacle_world_start_goal_free():
    for seed in range(10):
        world, waypoint = random_obstacle_world(seed)
        cell = world.robot.cell()
        assert not world.obstacles[cell.y, cell.x]
        assert not world.obstacles[waypoint.y, waypoint.x]
    a, _ = random_obstacle_world(3)
    b, _ = random_obstacle_world(3)
    assert np.array_equal(a.obstacles, b.obstacles)


def test_train_clone_smoke():
    config = CloneConfig(
        dagger_rounds=2, episodes_per_round=6, epochs=3, seed=1, eval_worlds=5,
        max_steps=80,
    )
    result = train_clone(random_obstacle_world, config)
    assert len(result.success_rates) == 2
    assert len(result.dataset_sizes) == 2
    assert result.dataset_sizes[1] > result.dataset_sizes[0]
    assert result.dataset_x.shape[0] == result.dataset_sizes[-1]
    with pytest.raises(ValueError):
        train_clone(random_obstacle_world, CloneConfig(dagger_rounds=0))


def test_dataset_csv_round_trip(tmp_path, rng):
    x = rng.random((6, 10))
    y = rng.random((6, 5))
    path = tmp_path / "dataset.csv"
    save_dataset_csv(path, x, y)
    x2, y2 = load_dataset_csv(path, 5)
    assert np.allclose(x, x2)
    assert np.allclose(y, y2)
