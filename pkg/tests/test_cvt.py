import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_assignment, rect_centroid_by_integration
from uavswarm.cvt import (ConfigError, LloydParams, LloydState, Region, assign_targets,
                          assignment_cost, distortion, lloyd_iterate, monte_carlo_centroids,
                          nearest_seed, run_lloyd)

BARRIER = Region((-5.0, -2.3), (5.0, 2.3))


def test_region_validation():
    with pytest.raises(ConfigError):
        Region((0, 0), (0, 1))
    with pytest.raises(ConfigError):
        Region((0, 0), (1, 1, 1))
    with pytest.raises(ConfigError):
        Region((0, 0), (1, 1), density="gaussian")


def test_region_geometry():
    r = Region((0, 0, 0), (2, 3, 6))
    assert r.dim == 3 and r.volume == 36.0 and r.diameter == 7.0


@pytest.mark.parametrize("kwargs", [
    dict(n=0), dict(n=5, s_num=4), dict(n=1, a1=0.6, a2=0.5), dict(n=1, b1=1.0, b2=0.0),
    dict(n=1, max_iter=0), dict(n=1, move_tol=-1), dict(n=1, rng_seed=-1), dict(n=1, stall_rtol=-1),
])
def test_params_validation(kwargs):
    with pytest.raises(ConfigError):
        LloydParams(**kwargs)


def test_default_sample_count():
    assert LloydParams(n=7).samples == 700


def test_single_cell_moves_toward_sample_mean():
    region = Region((0, 0), (1, 1))
    state = LloydState.from_seeds([[0.1, 0.9]])
    params = LloydParams(n=1, s_num=500)
    lloyd_iterate(state, region, params, np.random.default_rng(0))
    u = state.means[0]
    assert np.allclose(state.seeds[0], 0.5 * np.array([0.1, 0.9]) + 0.5 * u)
    assert state.counters[0] == 2
    assert state.masses[0] == pytest.approx(1.0)
    cell = state.cell(0)
    assert cell.counter == 2 and np.array_equal(cell.centroid, u)


def test_update_rule_weights_follow_formula():
    # a1 = b1 = 0, a2 = b2 = 1 at j = 1: weights (0 j + 0)/2 = 0 and (j + 1)/2 = 1, so x <- u
    region = Region((0, 0), (1, 1))
    state = LloydState.from_seeds([[0.2, 0.2]])
    params = LloydParams(n=1, s_num=200, a1=0.0, a2=1.0, b1=0.0, b2=1.0)
    lloyd_iterate(state, region, params, np.random.default_rng(3))
    assert np.allclose(state.seeds[0], state.means[0], atol=1e-15)


def test_update_rule_symmetric_weights_give_midpoint():
    region = Region((0, 0), (1, 1))
    x0 = np.array([0.2, 0.2])
    state = LloydState.from_seeds([x0])
    lloyd_iterate(state, region, LloydParams(n=1, s_num=200), np.random.default_rng(3))
    assert np.allclose(state.seeds[0], x0 / 2 + state.means[0] / 2, atol=1e-15)


def test_duplicated_seed_keeps_position():
    region = Region((0, 0), (1, 1))
    state = LloydState.from_seeds([[0.3, 0.3], [0.3, 0.3], [0.8, 0.8]])
    lloyd_iterate(state, region, LloydParams(n=3, s_num=300), np.random.default_rng(1))
    assert np.array_equal(state.seeds[1], [0.3, 0.3])
    assert state.counters[1] == 1 and state.masses[1] == 0.0
    assert state.cell(1).sample_mean is None
    assert state.counters[0] == 2


def test_nearest_seed_ties_go_to_lowest_index():
    idx, d2 = nearest_seed(np.array([[0.5, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert idx[0] == 0 and d2[0] == 0.25


def test_counters_after_k_iterations():
    region = Region((0, 0), (1, 1))
    state = LloydState.from_seeds([[0.25, 0.5], [0.75, 0.5]])
    rng = np.random.default_rng(0)
    params = LloydParams(n=2, s_num=2000)
    for _ in range(6):
        lloyd_iterate(state, region, params, rng)
    assert state.counters.tolist() == [7, 7]


def test_single_seed_reaches_center_of_mass():
    oracle = rect_centroid_by_integration((0, 0), (1, 1))
    assert np.allclose(oracle, [0.5, 0.5], atol=1e-12)
    for seed in range(10):
        r = run_lloyd(Region((0, 0), (1, 1)), LloydParams(n=1, s_num=20_000, stall_rtol=1e-4, rng_seed=seed))
        assert np.linalg.norm(r.seeds[0] - oracle) < 0.02


def test_two_seeds_split_the_strip():
    expected = np.array([rect_centroid_by_integration((0, 0), (1, 1)),
                         rect_centroid_by_integration((1, 0), (2, 1))])
    for seed in range(10):
        r = run_lloyd(Region((0, 0), (2, 1)), LloydParams(n=2, s_num=20_000, stall_rtol=1e-4, rng_seed=seed))
        s = r.seeds[np.argsort(r.seeds[:, 0])]
        assert np.all(np.linalg.norm(s - expected, axis=1) < 0.05)


def test_twenty_seeds_sit_on_their_centroids():
    r = run_lloyd(BARRIER, LloydParams(n=20, rng_seed=4))
    c = monte_carlo_centroids(r.seeds, BARRIER, 100_000, seed=123)
    assert np.all(np.linalg.norm(r.seeds - c, axis=1) < 0.05 * BARRIER.diameter)


def test_run_lloyd_deterministic():
    a = run_lloyd(BARRIER, LloydParams(n=8, rng_seed=11))
    b = run_lloyd(BARRIER, LloydParams(n=8, rng_seed=11))
    assert a.iterations == b.iterations
    assert all(np.array_equal(x, y) for x, y in zip(a.history, b.history))
    c = run_lloyd(BARRIER, LloydParams(n=8, rng_seed=12))
    assert not np.array_equal(a.seeds, c.seeds)


def test_seeds_stay_inside_region():
    r = run_lloyd(BARRIER, LloydParams(n=12, rng_seed=2), init=np.full((12, 2), 50.0))
    assert np.all(r.seeds >= BARRIER.lo) and np.all(r.seeds <= BARRIER.hi)


def test_three_dimensional_region():
    box = Region((0, 0, 0), (1, 1, 1))
    r = run_lloyd(box, LloydParams(n=1, s_num=20_000, stall_rtol=1e-4))
    assert r.seeds.shape == (1, 3)
    assert np.linalg.norm(r.seeds[0] - 0.5) < 0.03


def test_move_tol_convergence():
    # huge sample count so the sampling jitter sits below the tolerance
    r = run_lloyd(Region((0, 0), (1, 1)), LloydParams(n=1, s_num=200_000, move_tol=5e-3, stall_rtol=0))
    assert r.converged and r.stop_reason == "move_tol"


def test_max_iter_warns(caplog):
    with caplog.at_level(logging.WARNING):
        r = run_lloyd(BARRIER, LloydParams(n=4, max_iter=2, stall_rtol=0, move_tol=0))
    assert r.iterations == 2 and not r.converged and r.stop_reason == "max_iter"
    assert "did not converge" in caplog.text


@pytest.mark.parametrize("n", [1, 2, 8, 12, 20])
def test_energy_descends(n):
    evaluation = BARRIER.sample(np.random.default_rng(999), 100_000)
    for seed in range(3):
        r = run_lloyd(BARRIER, LloydParams(n=n, rng_seed=seed))
        e = [distortion(h, evaluation, BARRIER.volume) for h in r.history]
        assert len(e) >= 2 and e[-1] < e[0]
        assert np.mean(np.diff(e) < 0) >= 0.9


def test_distortion_of_single_seed_at_center():
    # analytic second moment of the unit square about its center is 1/6
    pts = Region((0, 0), (1, 1)).sample(np.random.default_rng(0), 200_000)
    assert distortion(np.array([[0.5, 0.5]]), pts) == pytest.approx(1 / 6, rel=1e-2)


def test_assign_identity():
    s = np.random.default_rng(0).normal(size=(6, 2))
    assert assign_targets(s, s).tolist() == list(range(6))


def test_assign_recovers_permutation():
    s = np.random.default_rng(1).normal(size=(7, 2))
    sigma = np.array([3, 0, 6, 1, 5, 2, 4])
    positions = s[sigma]
    m = assign_targets(positions, s)
    assert np.array_equal(m, sigma)
    assert np.array_equal(s[m], positions)


def test_assign_two_agents_cross():
    m = assign_targets([[0, 0], [10, 0]], [[9, 0], [1, 0]])
    assert m.tolist() == [1, 0]


def test_assign_length_mismatch():
    with pytest.raises(ConfigError):
        assign_targets(np.zeros((2, 2)), np.zeros((3, 2)))
    with pytest.raises(ConfigError):
        assign_targets(np.zeros((2, 2)), np.zeros((2, 2)), method="auction")


def test_greedy_is_available_and_a_bijection():
    p = np.array([[0.0, 0], [1, 0], [2, 0]])
    s = np.array([[1.1, 0], [0.1, 0], [2.1, 0]])
    assert sorted(assign_targets(p, s, "greedy").tolist()) == [0, 1, 2]


point_sets = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=n, max_size=n),
    st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=n, max_size=n)))


@settings(max_examples=60, deadline=None)
@given(point_sets)
def test_assignment_is_optimal_bijection(data):
    p, s = (np.array(x, dtype=float) for x in data)
    m = assign_targets(p, s)
    assert sorted(m.tolist()) == list(range(len(p)))
    cost = assignment_cost(p, s, m)
    best, _ = brute_force_assignment(p, s)
    assert cost == pytest.approx(best, rel=1e-9, abs=1e-9)
    assert cost <= assignment_cost(p, s, np.arange(len(p))) + 1e-9
    g = assign_targets(p, s, "greedy")
    assert sorted(g.tolist()) == list(range(len(p)))
