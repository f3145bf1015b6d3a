"""Class -> drivability table, scoremap rendering, and online updates.

Each terrain class carries a score in [0, 1] that is refined after every
traversal with an exponential moving average of the observed instantaneous
drivability.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .grids import ClassMap, ScoreMap, TraversalFeedback


@dataclass
class ClassDrivability:
    score: float
    observations: int = 0


@dataclass
class DrivabilityTable:
    entries: dict = field(default_factory=dict)
    alpha: float = 0.3  # EMA mixing weight for new evidence
    beta: float = 1.0  # penalty weight on obstacle incidence
    prior: float = 0.5  # score assigned to classes never traversed
    nominal_speed: float = 1.0  # progress per step counted as drivability 1

    def get_score(self, class_id: int) -> float:
        entry = self.entries.get(int(class_id))
        return entry.score if entry is not None else self.prior

    def copy(self) -> "DrivabilityTable":
        return DrivabilityTable(
            {cid: ClassDrivability(e.score, e.observations) for cid, e in self.entries.items()},
            self.alpha,
            self.beta,
            self.prior,
            self.nominal_speed,
        )

    def to_json(self, path) -> None:
        payload = {
            "classes": {
                str(cid): {"score": e.score, "observations": e.observations}
                for cid, e in sorted(self.entries.items())
            },
            "alpha": self.alpha,
            "beta": self.beta,
            "prior": self.prior,
            "nominal_speed": self.nominal_speed,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)

    @classmethod
    def from_json(cls, path) -> "DrivabilityTable":
        with open(path) as fh:
            payload = json.load(fh)
        entries = {
            int(cid): ClassDrivability(rec["score"], rec.get("observations", 0))
            for cid, rec in payload.get("classes", {}).items()
        }
        return cls(
            entries,
            payload.get("alpha", 0.3),
            payload.get("beta", 1.0),
            payload.get("prior", 0.5),
            payload.get("nominal_speed", 1.0),
        )


def render_scoremap(class_map: ClassMap, table: DrivabilityTable) -> ScoreMap:
    """Per-cell table lookup: score(i, j) = table[class(i, j)]."""
    import numpy as np

    lut = np.array([table.get_score(c) for c in range(class_map.num_classes)])
    return ScoreMap(lut[class_map.classes])


def instantaneous_drivability(table: DrivabilityTable, feedback: TraversalFeedback) -> float:
    """Observed drivability of one traversal, clamped to [0, 1]."""
    d = (
        feedback.progress_rate / table.nominal_speed
        - table.beta * feedback.obstacle_incidents / feedback.steps
    )
    return min(max(d, 0.0), 1.0)


def update_drivability(table: DrivabilityTable, feedback: TraversalFeedback) -> DrivabilityTable:
    """EMA update of one class's score from traversal feedback.

    Unknown classes are created from the prior before the update applies.
    Returns a new table; the input is untouched.
    """
    if feedback.steps < 1:
        raise ValueError("feedback must cover at least one step")
    new = table.copy()
    cid = int(feedback.class_id)
    entry = new.entries.setdefault(cid, ClassDrivability(new.prior, 0))
    d = instantaneous_drivability(new, feedback)
    entry.score = (1.0 - new.alpha) * entry.score + new.alpha * d
    entry.observations += 1
    return new
