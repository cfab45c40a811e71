"""Small vector/rotation helpers shared by the controllers.

Vectors are plain ``numpy`` float arrays of shape ``(3,)``; matrices are
``(2, 2)`` or ``(3, 3)`` arrays.
"""

from __future__ import annotations

import math

import numpy as np

EPS_SPEED = 1e-9


class UndefinedAngle(ValueError):
    """Raised when an angle is requested against a (near) zero vector."""


def vec3(x: float = 0.0, y: float = 0.0, z: float = 0.0) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def rot2(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]])


def rot_y(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot3(alpha: float) -> np.ndarray:
    """Composite ``Rx · Ry(alpha) · Rz(alpha)`` with the x-rotation held at identity."""
    return rot_y(alpha) @ rot_z(alpha)


def rot2_embedded(alpha: float) -> np.ndarray:
    """Planar rotation acting on the xy components, z passed through."""
    return rot_z(alpha)


def avoidance_angle(dist: float, r_s: float, r_d: float) -> float:
    """Distance-scheduled deflection angle in ``[0, pi/2]``.

    Linear ramp from ``pi/2`` at the safety range down to 0 at the detection
    range; 0 outside the band. ``dist == r_s`` returns ``pi/2``.
    """
    if not r_s < r_d:
        raise ValueError(f"avoidance angle needs r_s < r_d (got r_s={r_s}, r_d={r_d})")
    if dist == r_s:
        return math.pi / 2
    if r_s < dist < r_d:
        alpha = (math.pi / 2) * (r_d - dist) / (r_d - r_s)
        return min(max(alpha, 0.0), math.pi / 2)
    return 0.0


def angle_between(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu <= EPS_SPEED or nv <= EPS_SPEED:
        raise UndefinedAngle("angle undefined for a near-zero vector")
    c = float(np.dot(u, v)) / (nu * nv)
    return math.acos(min(1.0, max(-1.0, c)))


def wrap_angle(a: float) -> float:
    """Wrap to ``(-pi, pi]``."""
    w = math.remainder(a, 2 * math.pi)
    if w == -math.pi:
        return math.pi
    return w


def require_finite(v: np.ndarray, what: str = "vector") -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{what} has non-finite components: {v!r}")
    return v
