"""Environment: moving sphere obstacles, box buildings and the barrier region."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cvt import ConfigError
from .detect import ObstacleView

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Obstacle:
    id: int
    center: np.ndarray
    radius: float = 1.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    activation_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        if self.radius < 0:
            raise ConfigError(f"obstacle {self.id}: radius must be >= 0")
        if self.activation_time < 0:
            raise ConfigError(f"obstacle {self.id}: activation_time must be >= 0")


@dataclass(frozen=True)
class Building:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if not np.all(self.lo < self.hi):
            raise ConfigError(f"building min corner must be < max corner: {self.lo} vs {self.hi}")


@dataclass(frozen=True)
class Barrier:
    """Planar rectangle at fixed altitude translating with constant velocity.

    ``targets`` are barrier-local (x, y) offsets; motion begins at
    ``motion_start`` so the flock can deploy first.
    """

    extents: tuple[float, float, float, float]  # x_min, x_max, y_min, y_max
    altitude: float
    velocity: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    targets: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    motion_start: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=float).reshape(-1, 2))
        x0, x1, y0, y1 = self.extents
        if not (x0 < x1 and y0 < y1):
            raise ConfigError(f"barrier extents must be positive: {self.extents}")
        t = self.targets
        if len(t) and not (np.all(t[:, 0] >= x0) and np.all(t[:, 0] <= x1)
                           and np.all(t[:, 1] >= y0) and np.all(t[:, 1] <= y1)):
            raise ConfigError("barrier targets must lie inside the barrier extents")
        if self.motion_start < 0:
            raise ConfigError("barrier motion_start must be >= 0")

    def with_targets(self, targets) -> "Barrier":
        return Barrier(self.extents, self.altitude, self.velocity, targets, self.motion_start)

    def offset_at(self, t: float) -> np.ndarray:
        return self.velocity * max(0.0, t - self.motion_start)

    def velocity_at(self, t: float) -> np.ndarray:
        return self.velocity.copy() if t >= self.motion_start else np.zeros(3)


def obstacle_center_at(obstacle: Obstacle, t: float) -> np.ndarray:
    return obstacle.center + obstacle.velocity * max(0.0, t - obstacle.activation_time)


def building_proxy(p, building: Building, ident: int = -1) -> ObstacleView:
    """Zero-radius virtual obstacle at the box surface point nearest ``p``."""
    p = np.asarray(p, dtype=float)
    q = np.clip(p, building.lo, building.hi)
    if np.array_equal(q, p):
        # inside (or on) the box: project onto the nearest face
        gaps = np.stack([p - building.lo, building.hi - p])  # (2, 3)
        face = int(np.argmin(gaps.min(axis=0)))
        side = int(np.argmin(gaps[:, face]))
        if gaps[side, face] > 0:
            log.warning("penetration: point %s inside building %d", p.tolist(), ident)
        q = p.copy()
        q[face] = building.lo[face] if side == 0 else building.hi[face]
    return ObstacleView(q, 0.0, ident)


def barrier_targets_at(barrier: Barrier, t: float) -> np.ndarray:
    """World-frame targets at time ``t``, shape ``(n, 3)``."""
    n = len(barrier.targets)
    out = np.empty((n, 3))
    out[:, :2] = barrier.targets
    out[:, 2] = barrier.altitude
    return out + barrier.offset_at(t)


def box_distance(p, building: Building) -> float:
    """Euclidean distance from ``p`` to the box (0 inside)."""
    p = np.asarray(p, dtype=float)
    return float(np.linalg.norm(p - np.clip(p, building.lo, building.hi)))
