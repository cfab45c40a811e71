import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from uavswarm.cvt import ConfigError
from uavswarm.detect import DetectionParams, ObstacleView, detect_3d, detect_planar, neighbor_set

P = DetectionParams()


def test_params_validation():
    with pytest.raises(ConfigError):
        DetectionParams(r_d=1.0, r_s=1.0)
    with pytest.raises(ConfigError):
        DetectionParams(r_s=0.0)
    with pytest.raises(ConfigError):
        DetectionParams(theta_fov=math.pi)
    with pytest.raises(ConfigError):
        DetectionParams(fov_combine="xor")
    with pytest.raises(ConfigError):
        ObstacleView(np.zeros(3), -0.1)


def test_neighbor_set_examples():
    pos = np.array([[0, 0, 0], [0.5, 0, 0]])
    assert neighbor_set(pos, 0, 2.0) == {1}
    assert neighbor_set(pos, 1, 2.0) == {0}
    assert neighbor_set(np.zeros((1, 3)), 0, 2.0) == set()
    assert neighbor_set(np.array([[0, 0, 0], [2.0, 0, 0]]), 0, 2.0) == set()


@settings(max_examples=50)
@given(st.lists(st.tuples(*[st.floats(-3, 3)] * 3), min_size=2, max_size=8), st.floats(0.1, 4))
def test_neighbor_set_symmetric(points, radius):
    pos = np.array(points)
    for i in range(len(pos)):
        for j in neighbor_set(pos, i, radius):
            assert i in neighbor_set(pos, j, radius)


def test_planar_obstacle_ahead_detected():
    obs = ObstacleView(np.array([1.5, 0, 0]), 1.0)
    assert detect_planar(np.zeros(3), 0.0, obs, P)


def test_planar_obstacle_behind_not_detected():
    obs = ObstacleView(np.array([-1.5, 0, 0]), 1.0)
    assert not detect_planar(np.zeros(3), 0.0, obs, P)


def test_planar_obstacle_out_of_range():
    obs = ObstacleView(np.array([10.0, 0, 0]), 1.0)
    assert not detect_planar(np.zeros(3), 0.0, obs, P)


def test_planar_or_flag_admits_vertical_only_hits():
    # behind in the horizontal sense, but level in x-z: the literal "or" rule sees it
    obs = ObstacleView(np.array([1.0, -1.9, 0]), 1.0)
    heading = math.pi / 2
    assert not detect_planar(np.zeros(3), heading, obs, P)
    assert detect_planar(np.zeros(3), heading, obs, DetectionParams(fov_combine="or"))


def test_3d_examples():
    v = np.array([1.0, 0, 0])
    assert detect_3d(np.zeros(3), v, ObstacleView(np.array([1.5, 0, 0]), 0.5), P)
    assert not detect_3d(np.zeros(3), v, ObstacleView(np.array([-1.5, 0, 0]), 0.5), P)


def test_3d_cone_boundary_is_inclusive():
    # orthogonal vectors give exactly pi/2 in floating point
    params = DetectionParams(theta_fov=math.pi / 2)
    assert detect_3d(np.zeros(3), np.array([1.0, 0, 0]), ObstacleView(np.array([0, 1.0, 0]), 0.0), params)


def test_3d_hovering_falls_back_to_range():
    behind = ObstacleView(np.array([-1.5, 0, 0]), 0.5)
    assert detect_3d(np.zeros(3), np.zeros(3), behind, P)
    far = ObstacleView(np.array([-5.0, 0, 0]), 0.5)
    assert not detect_3d(np.zeros(3), np.zeros(3), far, P)


def test_3d_coincident_center_not_detected():
    assert not detect_3d(np.zeros(3), np.array([1.0, 0, 0]), ObstacleView(np.zeros(3), 1.0), P)


def _random_3d(rng):
    p = rng.uniform(-3, 3, 3)
    v = rng.normal(size=3) * (0 if rng.random() < 0.05 else rng.uniform(0.1, 2))
    c = p + rng.uniform(-4, 4, 3)
    return p, v, c, rng.uniform(0, 1.5)


def test_3d_rigid_rotation_and_speed_scaling():
    rng = np.random.default_rng(5)
    for _ in range(500):
        p, v, c, r = _random_3d(rng)
        rot = Rotation.random(random_state=rng).as_matrix()
        s = rng.uniform(0.1, 10)
        base = detect_3d(p, v, ObstacleView(c, r), P)
        d = c - p
        # skip configurations within rounding distance of a boundary
        if abs(np.linalg.norm(d) - (P.r_d + r)) < 1e-9:
            continue
        if np.linalg.norm(v) > 0:
            cos = d @ v / (np.linalg.norm(d) * np.linalg.norm(v))
            if abs(cos - math.cos(P.theta_fov)) < 1e-9:
                continue
        assert detect_3d(rot @ p, rot @ v, ObstacleView(rot @ c, r), P) == base
        assert detect_3d(p, s * v, ObstacleView(c, r), P) == base


@given(st.floats(-math.pi, math.pi), st.floats(0.5, 1.0))
def test_planar_heading_rotation(heading, dist):
    # an obstacle placed straight along any heading at the agent's altitude is in the sector;
    # the elevation term is flat when dz = 0
    c = np.array([dist * math.cos(heading), dist * math.sin(heading), 0.0])
    assert detect_planar(np.zeros(3), heading, ObstacleView(c, 0.0), P)
