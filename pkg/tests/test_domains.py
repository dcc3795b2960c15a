import numpy as np
import pytest

from crowdgen.domains import (GeneratorConfig, RandomPairConfig, StandardKind, build_random_dataset,
                              build_standard, layout, load_dataset, representative_split, sample_random_pair,
                              sample_representative, save_dataset, standard_suite)
from crowdgen.errors import ValidationError
from crowdgen.guidance import PlannerConfig, astar_plan, build_costmap
from crowdgen.perception import FEATURE_SIZE, RAY_COUNT


@pytest.mark.parametrize('kind, width', [(StandardKind.Evacuation1, 2.4), (StandardKind.Evacuation2, 1.4)])
def test_evacuation_doorway_widths(kind, width):
    _, walls, meta = layout(kind)
    assert meta['doorway_width'] == width
    # the right wall is split around the doorway
    lower, upper = walls[3], walls[4]
    assert upper.bbox[1] - lower.bbox[3] == pytest.approx(width)


def test_concentric_circle_goals_are_antipodal():
    scenario = build_standard(StandardKind.ConcentricCircles, 12, seed=4)
    starts = np.array([task.start for task in scenario.tasks])
    goals = np.array([task.goal for task in scenario.tasks])
    np.testing.assert_allclose(goals, -starts)
    np.testing.assert_allclose(np.linalg.norm(starts, axis=-1), 10.0)


@pytest.mark.parametrize('kind', list(StandardKind))
@pytest.mark.parametrize('density', [1, 10, 50])
def test_standard_scenarios_are_valid(kind, density):
    scenario = build_standard(kind, density, seed=2)
    assert scenario.num_agents == density
    assert scenario.domain_tag == 'X'
    assert scenario.meta['kind'] == kind.value
    assert all(task.radius == 0.5 for task in scenario.tasks)


def test_standard_scenarios_are_deterministic():
    a = build_standard(StandardKind.HallwayFourWay, 20, seed=5)
    b = build_standard(StandardKind.HallwayFourWay, 20, seed=5)
    c = build_standard(StandardKind.HallwayFourWay, 20, seed=6)
    assert a.to_dict() == b.to_dict()
    assert a.to_dict() != c.to_dict()


@pytest.mark.parametrize('density', [0, 51])
def test_density_out_of_range(density):
    with pytest.raises(ValidationError):
        build_standard(StandardKind.Evacuation1, density)


def test_standard_suite_enumerates_every_variation():
    scenarios = list(standard_suite(densities=(10, 20), variations=3))
    assert len(scenarios) == len(StandardKind) * 2 * 3
    assert len({s.id for s in scenarios}) == len(scenarios)


def test_representative_scenario_tasks_are_reachable():
    planner = PlannerConfig()
    config = GeneratorConfig()
    for seed in range(3):
        scenario = sample_representative(seed, config, planner)
        assert config.obstacle_count[0] <= len(scenario.obstacles) <= config.obstacle_count[1]
        assert config.agent_count[0] <= scenario.num_agents <= config.agent_count[1]
        grid = build_costmap(scenario, planner.cell_size, planner.sigma)
        for task in scenario.tasks:
            assert np.linalg.norm(task.goal - task.start) >= config.min_travel
            astar_plan(grid, task.start, task.goal, planner.weight, planner.hard_threshold)


def test_representative_generation_is_deterministic():
    assert sample_representative(11).to_dict() == sample_representative(11).to_dict()


def test_representative_split_is_disjoint():
    train, test = representative_split(5, 3, seed=10)
    assert train == [10, 11, 12, 13, 14]
    assert test == [15, 16, 17]


def test_generator_config_validation():
    with pytest.raises(ValidationError):
        GeneratorConfig(vertex_count=(2, 4))
    with pytest.raises(ValidationError):
        GeneratorConfig(circumradius=(1.0, 20.0))


def test_lonely_random_pair_follows_its_preferred_velocity():
    pair = sample_random_pair(3, RandomPairConfig(neighbor_count=(0, 0)))
    np.testing.assert_allclose(pair.observation.range_map, 10.0)
    np.testing.assert_allclose(pair.expert_action, pair.observation.local_guidance, atol=1e-12)
    np.testing.assert_allclose(pair.observation.global_guidance, pair.observation.local_guidance)


def test_random_pairs_are_valid_and_seeded():
    a = sample_random_pair((4, 2))
    b = sample_random_pair((4, 2))
    np.testing.assert_array_equal(a.features, b.features)
    assert a.features.shape == (FEATURE_SIZE,)
    assert np.linalg.norm(a.expert_action) <= 1.5 + 1e-9
    # without obstacles every ray ends at a neighbour or at the sensing range
    assert np.all(a.observation.range_map[:RAY_COUNT] <= 10.0)


@pytest.mark.parametrize('suffix', ['.npz', '.csv'])
def test_random_dataset_round_trip(tmp_path, suffix):
    features, actions = build_random_dataset(6, seed=1, workers=1)
    assert features.shape == (6, FEATURE_SIZE)
    assert actions.shape == (6, 2)
    path = tmp_path / f'pairs{suffix}'
    save_dataset(path, features, actions)
    loaded_features, loaded_actions = load_dataset(path)
    np.testing.assert_allclose(loaded_features, features, atol=1e-6)
    np.testing.assert_allclose(loaded_actions, actions, atol=1e-6)
