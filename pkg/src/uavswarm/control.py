"""Per-agent control laws and their superposition.

All gains that the model treats as diagonal matrices are stored as length-3
arrays of the diagonal and applied elementwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cvt import ConfigError
from .detect import DetectionParams, ObstacleView, detect_3d, detect_planar
from .geom import avoidance_angle, rot2_embedded, rot3

log = logging.getLogger(__name__)

EPS_CLAMP = 1e-2
EPS_GRAD = 1e-9
UP = np.array([0.0, 0.0, 1.0])


def _diag(value, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (3,)).copy()
    if not np.all(arr > 0):
        raise ConfigError(f"gain {name} must be positive definite (diagonal {arr.tolist()})")
    return arr


@dataclass(frozen=True)
class Gains:
    """Controller constants. ``k_c1`` and ``k_c2`` default to unit gains."""

    K_p: np.ndarray = field(default_factory=lambda: np.array([3.0, 3.0, 3.0]))
    K_v: np.ndarray = field(default_factory=lambda: np.array([5.0, 5.0, 5.0]))
    k_c1: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 1.0]))
    k_c2: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 1.0]))
    k_v: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.5, 0.1]))
    k_r: float = 0.5
    k_o1: np.ndarray = field(default_factory=lambda: np.array([5.0, 5.0, 5.0]))
    k_o2: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 1.0]))

    def __post_init__(self):
        for name in ("K_p", "K_v", "k_c1", "k_c2", "k_v", "k_o1", "k_o2"):
            object.__setattr__(self, name, _diag(getattr(self, name), name))
        if not self.k_r > 0:
            raise ConfigError(f"k_r must be positive (got {self.k_r})")


@dataclass
class ControlBreakdown:
    u_f: np.ndarray
    u_c: np.ndarray
    u_o: np.ndarray
    u_total: np.ndarray
    detected: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    active: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def formation_accel(p, v, target, target_velocity, gains: Gains) -> np.ndarray:
    return -gains.K_p * (p - target) - gains.K_v * (v - target_velocity)


def collision_accel(i: int, positions: np.ndarray, velocities: np.ndarray, gains: Gains,
                    params: DetectionParams, activation_radius: float | None = None,
                    literal_trigger: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Spring-damper repulsion from every neighbor inside the activation radius.

    Returns the summed acceleration and a boolean mask of active neighbors.
    ``literal_trigger`` activates only inside the safety range instead.
    """
    radius = params.r_d if activation_radius is None else activation_radius
    if radius <= params.r_s:
        raise ConfigError("collision activation radius must exceed r_s")
    p_ij = positions - positions[i]
    v_ij = velocities - velocities[i]
    dist = np.linalg.norm(p_ij, axis=1)
    limit = params.r_s if literal_trigger else radius
    active = dist < limit
    active[i] = False
    if not active.any():
        return np.zeros(3), active
    d = dist[active]
    gap = np.maximum(d - params.r_s, EPS_CLAMP)
    unit = p_ij[active] / np.where(d > 0, d, 1.0)[:, None]
    # coincident agents separate vertically, lower index goes down
    same = d == 0
    if same.any():
        idx = np.flatnonzero(active)[same]
        unit[same] = np.sign(idx - i)[:, None] * UP
    p_c = unit / (gap ** 2)[:, None]
    u = (-gains.k_c1 * p_c + gains.k_c2 * v_ij[active]).sum(axis=0)
    return u, active


def obstacle_potentials(p, obstacle: ObstacleView, gains: Gains, params: DetectionParams,
                        detected: bool, alpha: float | None = None) -> tuple[float, float]:
    """Translational and rotational potential values (both 0 when undetected)."""
    if not detected:
        return 0.0, 0.0
    x = p - obstacle.center
    r_a = params.r_d + obstacle.radius
    u_p = 0.5 * (float(np.linalg.norm(gains.k_v * x)) - r_a) ** 2
    if alpha is None:
        alpha = avoidance_angle(float(np.linalg.norm(x)), params.r_s, params.r_d)
    u_r = 0.5 * gains.k_r * float(np.linalg.norm(rot3(alpha) @ x)) ** 2
    return u_p, u_r


def translational_gradient(x: np.ndarray, r_a: float, k_v: np.ndarray) -> tuple[np.ndarray, bool]:
    """``(|k_v x| - r_a) * k_v x / |k_v x|``; +z direction when ``|k_v x|`` vanishes."""
    kx = k_v * x
    n = float(np.linalg.norm(kx))
    if n < EPS_GRAD:
        return (n - r_a) * UP, True
    return (n - r_a) * kx / n, False


def rotational_force(x: np.ndarray, alpha: float, k_r: float, mode: str) -> np.ndarray:
    rot = rot3(alpha) if mode == "3d" else rot2_embedded(alpha)
    return k_r * (rot @ x)


def obstacle_accel(p, v, heading: float, obstacles: list[ObstacleView], mode: str,
                   gains: Gains, params: DetectionParams) -> tuple[np.ndarray, np.ndarray]:
    """Avoidance acceleration and a per-obstacle detection mask.

    Zero (damping included) unless at least one obstacle is detected.
    """
    if mode not in ("planar", "3d"):
        raise ConfigError(f"unknown maneuver mode {mode!r}")
    detected = np.zeros(len(obstacles), dtype=bool)
    grad_p = np.zeros(3)
    force_r = np.zeros(3)
    for k, obs in enumerate(obstacles):
        if mode == "3d":
            hit = detect_3d(p, v, obs, params)
        else:
            hit = detect_planar(p, heading, obs, params)
        if not hit:
            continue
        detected[k] = True
        x = p - obs.center
        g, degenerate = translational_gradient(x, params.r_d + obs.radius, gains.k_v)
        if degenerate:
            log.warning("penetration: agent at obstacle %d center", obs.id)
        grad_p += g
        alpha = avoidance_angle(float(np.linalg.norm(x)), params.r_s, params.r_d)
        force_r += rotational_force(x, alpha, gains.k_r, mode)
    if not detected.any():
        return np.zeros(3), detected
    u = -gains.k_o1 * grad_p - force_r - gains.k_o2 * v
    if mode == "planar":
        u[2] = 0.0
    return u, detected


def total_accel(u_f, u_c, u_o, detected=None, active=None) -> ControlBreakdown:
    out = ControlBreakdown(np.asarray(u_f, float), np.asarray(u_c, float), np.asarray(u_o, float),
                           np.asarray(u_f, float) + np.asarray(u_c, float) + np.asarray(u_o, float))
    if detected is not None:
        out.detected = detected
    if active is not None:
        out.active = active
    return out
