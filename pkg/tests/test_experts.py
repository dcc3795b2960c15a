import numpy as np
import pytest

from crowdgen.errors import Infeasible, ValidationError
from crowdgen.experts import (HalfPlane, OrcaExpert, OrcaParams, SocialForceExpert, SocialForceParams,
                              expert_controller, orca_velocity, safest_velocity, social_force_acceleration,
                              solve_lp2d)
from crowdgen.geometry import ObstacleSet, Polygon
from crowdgen.harness.repro import check_orca_sparse
from crowdgen.metrics import count_aa
from crowdgen.world import AgentTask, Scenario, SimConfig, run_simulation


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def feasible(lines, v, tol=1e-9):
    return all(line.violation(v) <= tol for line in lines)


def grid_optimum(lines, preferred, radius, rings=200, spokes=720):
    """Closest feasible point of a polar grid over the speed disc."""
    r = np.linspace(0, radius, rings)[:, None]
    theta = np.linspace(0, 2 * np.pi, spokes, endpoint=False)[None, :]
    points = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1).reshape(-1, 2)
    ok = np.ones(len(points), dtype=bool)
    for line in lines:
        ok &= np.cross(line.direction, line.point - points) <= 0
    if not ok.any():
        return None
    return np.linalg.norm(points[ok] - preferred, axis=-1).min()


def test_lp_unconstrained_returns_preferred_or_its_projection():
    np.testing.assert_allclose(solve_lp2d([], np.array([0.5, 0.0]), 1.0), [0.5, 0.0])
    np.testing.assert_allclose(solve_lp2d([], np.array([3.0, 4.0]), 1.0), [0.6, 0.8])


def test_lp_single_half_plane():
    # x <= 0.2
    line = HalfPlane(np.array([0.2, 0.0]), np.array([0.0, 1.0]))
    np.testing.assert_allclose(solve_lp2d([line], np.array([1.0, 0.3]), 1.5), [0.2, 0.3])


def test_lp_matches_polar_grid(rng):
    checked = 0
    for _ in range(200):
        lines = []
        for _ in range(rng.integers(1, 5)):
            angle = rng.uniform(0, 2 * np.pi)
            point = rng.uniform(-0.8, 0.8, size=2)
            lines.append(HalfPlane(point, np.array([np.cos(angle), np.sin(angle)])))
        preferred = rng.uniform(-2, 2, size=2)
        best = grid_optimum(lines, preferred, 1.0)
        try:
            v = solve_lp2d(lines, preferred, 1.0)
        except Infeasible:
            assert best is None
            continue
        checked += 1
        assert feasible(lines, v, 1e-7)
        assert np.linalg.norm(v) <= 1.0 + 1e-9
        if best is not None:
            assert np.linalg.norm(v - preferred) <= best + 1e-6
    assert checked > 50


def test_infeasible_program_falls_back_to_safest_velocity():
    # x >= 0.5 and x <= -0.5 cannot both hold
    lines = [HalfPlane(np.array([0.5, 0.0]), np.array([0.0, -1.0])),
             HalfPlane(np.array([-0.5, 0.0]), np.array([0.0, 1.0]))]
    with pytest.raises(Infeasible) as info:
        solve_lp2d(lines, np.zeros(2), 1.0)
    v = safest_velocity(lines, 0, info.value.index, info.value.partial, 1.0)
    assert max(line.violation(v) for line in lines) == pytest.approx(0.5, abs=1e-9)


def test_orca_without_neighbours_keeps_preferred_velocity():
    v = orca_velocity(np.zeros(2), np.zeros(2), 0.5, np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0),
                      np.array([1.0, 0.0]))
    np.testing.assert_allclose(v, [1.0, 0.0])


def test_orca_head_on_pair_is_reciprocal():
    p = np.array([[-2.0, 0.0], [2.0, 0.0]])
    vel = np.array([[1.0, 0.0], [-1.0, 0.0]])
    r = np.array([0.5, 0.5])
    v0 = orca_velocity(p[0], vel[0], 0.5, p[1:], vel[1:], r[1:], vel[0])
    v1 = orca_velocity(p[1], vel[1], 0.5, p[:1], vel[:1], r[:1], vel[1])
    np.testing.assert_allclose(v0, -v1, atol=1e-9)
    assert v0[1] != pytest.approx(0.0)


def test_orca_is_rotation_equivariant():
    p, vel = np.array([[-2.0, 0.3]]), np.array([[-1.0, 0.0]])
    base = orca_velocity(np.zeros(2), np.array([1.0, 0.0]), 0.5, p, vel, np.array([0.5]), np.array([1.0, 0.0]))
    rot = rotation(0.7)
    turned = orca_velocity(np.zeros(2), rot @ [1.0, 0.0], 0.5, p @ rot.T, vel @ rot.T, np.array([0.5]),
                           rot @ [1.0, 0.0])
    np.testing.assert_allclose(turned, rot @ base, atol=1e-9)


@pytest.mark.parametrize('count, seed', [(2, 0), (3, 1), (4, 2), (2, 3), (3, 4)])
def test_orca_sparse_crossings_stay_collision_free(count, seed):
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0, 2 * np.pi) + np.arange(count) * 2 * np.pi / count
    starts = rng.uniform(4.0, 6.0) * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    scenario = Scenario(f'cross-{seed}', (-8, -8, 8, 8), (), tuple(AgentTask(s, -s) for s in starts), 'X',
                        expert='orca')
    config = SimConfig(max_steps=300)
    log = run_simulation(scenario, expert_controller(scenario, config), config)
    assert count_aa(log, scenario.radii) == 0


@pytest.mark.slow
def test_orca_random_sparse_crossings_stay_collision_free():
    assert check_orca_sparse(np.random.default_rng(7), 100) == 0


def test_social_force_isolated_agent_accelerates_toward_goal():
    a = social_force_acceleration(np.zeros(2), np.zeros(2), 0.5, np.zeros((0, 2)), np.zeros(0), None,
                                  np.array([1.0, 0.0]))
    np.testing.assert_allclose(a, [2.68, 0.0])


def test_social_force_repulsion_at_contact_equals_strength():
    a = social_force_acceleration(np.zeros(2), np.zeros(2), 0.5, np.array([[1.0, 0.0]]), np.array([0.5]), None,
                                  np.zeros(2))
    np.testing.assert_allclose(a, [-2.0, 0.0])


def test_social_force_obstacle_pushes_away_from_wall():
    wall = ObstacleSet([Polygon.rectangle(1.0, -2.0, 2.0, 2.0)])
    # only the facing edge lies within the cutoff
    params = SocialForceParams(obstacle_cutoff=1.5)
    a = social_force_acceleration(np.zeros(2), np.zeros(2), 0.5, np.zeros((0, 2)), np.zeros(0), wall, np.zeros(2),
                                  params)
    assert a[0] == pytest.approx(-4.0 * np.exp((0.5 - 1.0) / 0.2))
    assert a[1] == pytest.approx(0.0, abs=1e-12)


def test_social_force_is_rotation_equivariant():
    neighbours, radii = np.array([[1.2, 0.4], [-0.5, 2.0]]), np.array([0.5, 0.4])
    velocity, direction = np.array([0.3, -0.2]), np.array([0.6, 0.8])
    base = social_force_acceleration(np.zeros(2), velocity, 0.5, neighbours, radii, None, direction)
    rot = rotation(1.1)
    turned = social_force_acceleration(np.zeros(2), rot @ velocity, 0.5, neighbours @ rot.T, radii, None,
                                       rot @ direction)
    np.testing.assert_allclose(turned, rot @ base, atol=1e-12)


def test_social_force_params_must_be_positive():
    with pytest.raises(ValidationError):
        SocialForceParams(relaxation_time=0.0)
    with pytest.raises(ValidationError):
        OrcaParams(time_horizon=-1.0)


@pytest.mark.parametrize('expert, cls', [('social_force', SocialForceExpert), ('orca', OrcaExpert)])
def test_expert_controllers_reach_goals_around_a_wall(expert, cls):
    wall = Polygon.rectangle(-0.5, -3.0, 0.5, 3.0)
    scenario = Scenario('wall', (-10, -10, 10, 10), (wall,), (AgentTask((-5.0, 0.0), (5.0, 0.0)),), 'G',
                        expert=expert)
    config = SimConfig(max_steps=300)
    controller = expert_controller(scenario, config)
    assert isinstance(controller, cls)
    log = run_simulation(scenario, controller, config)
    assert np.linalg.norm(log.track(0).positions[-1] - [5.0, 0.0]) <= config.arrival_tolerance + 1e-9
