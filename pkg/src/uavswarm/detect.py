"""Neighbor discovery and field-of-view obstacle detection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cvt import ConfigError
from .geom import EPS_SPEED, UndefinedAngle, angle_between, wrap_angle


@dataclass(frozen=True)
class DetectionParams:
    r_d: float = 2.0
    r_s: float = 1.0
    theta_fov: float = math.radians(60.0)  # half-angle
    fov_combine: str = "and"  # "or" restores the literal sector rule

    def __post_init__(self):
        if not 0 < self.r_s < self.r_d:
            raise ConfigError(f"need 0 < r_s < r_d (got r_s={self.r_s}, r_d={self.r_d})")
        if not 0 < self.theta_fov < math.pi:
            raise ConfigError(f"need 0 < theta_fov < pi (got {self.theta_fov})")
        if self.fov_combine not in ("and", "or"):
            raise ConfigError(f"fov_combine must be 'and' or 'or' (got {self.fov_combine!r})")


@dataclass(frozen=True)
class ObstacleView:
    center: np.ndarray
    radius: float
    id: int = -1

    def __post_init__(self):
        if self.radius < 0:
            raise ConfigError(f"obstacle radius must be >= 0 (got {self.radius})")


def neighbor_set(positions, i: int, radius: float) -> set[int]:
    p = np.asarray(positions, dtype=float)
    d = np.linalg.norm(p - p[i], axis=1)
    return {int(j) for j in np.flatnonzero(d < radius) if j != i}


def in_range(p: np.ndarray, obstacle: ObstacleView, params: DetectionParams) -> bool:
    return float(np.linalg.norm(p - obstacle.center)) <= params.r_d + obstacle.radius


def detect_planar(p: np.ndarray, heading: float, obstacle: ObstacleView,
                  params: DetectionParams) -> bool:
    """Sector FOV test in the motion plane plus an elevation test.

    Elevation is measured from the motion plane, so it stays small for a level
    obstacle whichever way the agent is heading.
    """
    if not in_range(p, obstacle, params):
        return False
    dx, dy, dz = (obstacle.center - p).tolist()
    horizontal = abs(wrap_angle(math.atan2(dy, dx) - heading)) < params.theta_fov
    vertical = abs(math.atan2(dz, math.hypot(dx, dy))) <= params.theta_fov
    if params.fov_combine == "or":
        return horizontal or vertical
    return horizontal and vertical


def detect_3d(p: np.ndarray, v: np.ndarray, obstacle: ObstacleView,
              params: DetectionParams) -> bool:
    """Spherical range plus conical FOV about the velocity vector.

    A hovering agent (speed at or below ``EPS_SPEED``) uses the range test alone.
    """
    if not in_range(p, obstacle, params):
        return False
    if np.linalg.norm(v) <= EPS_SPEED:
        return True
    try:
        return angle_between(obstacle.center - p, v) <= params.theta_fov
    except UndefinedAngle:
        return False
