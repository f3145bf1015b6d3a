"""Aerial-to-ground informative sampling toolkit.

Texture-segment an aerial image into terrain classes, score each class by
learned drivability, plan coverage paths over the scoremap with a
policy-gradient planner, and navigate between waypoints with a cloned
local steering policy, feeding traversal performance back into the scores.
"""

from .grids import (
    ClassMap,
    ContinuousPose,
    GridPose,
    ScoreMap,
    SimWorld,
    StepResult,
    TraversalFeedback,
    measure_feedback,
    ray_cast,
    step_unicycle,
)
from .global_planner import (
    FeatureGeometry,
    PlannerConfig,
    Rollout,
    baseline_boustrophedon,
    baseline_random_walk,
    discounted_return,
    plan_waypoints,
    policy_gradient,
    rollout,
    train,
)
from .local_nav import (
    CloneConfig,
    SteeringBins,
    SteeringNet,
    clone_loss,
    expert_action,
    navigate,
    predict,
    smooth_labels,
    train_clone,
)
from .pipeline import ExperimentConfig, compare_baselines, run_pipeline
from .scoremap import DrivabilityTable, render_scoremap, update_drivability
from .texture import FilterBank, filter_energy, hue_histogram, make_gabor_kernel, segment

__version__ = "0.1.0"
