import re

import numpy as np

from crowdgen.guidance import Layout
from crowdgen.harness import render_svg, save_svg
from crowdgen.harness.render import viewport_size, world_to_viewport
from crowdgen.world import AgentTrack, TrajectoryLog


def straight_log():
    positions = np.array([[0.0, 0.0], [2.5, 0.0], [5.0, 0.0]])
    velocities = np.array([[25.0, 0.0], [25.0, 0.0], [0.0, 0.0]])
    return TrajectoryLog('open', 0.1, [AgentTrack(0, np.arange(3), positions, velocities)])


def test_world_to_viewport():
    bounds = (-10.0, -10.0, 10.0, 10.0)
    pixels = world_to_viewport(bounds, 600.0, [[0.0, 0.0], [5.0, 0.0], [-10.0, 10.0]])
    np.testing.assert_allclose(pixels, [[300.0, 300.0], [450.0, 300.0], [0.0, 0.0]])
    assert viewport_size((0.0, 0.0, 40.0, 10.0), 600.0) == (600.0, 150.0)


def test_empty_layout_renders():
    svg = render_svg(Layout((0.0, 0.0, 10.0, 5.0), ()))
    assert svg.lstrip().startswith('<?xml')
    assert 'id="bounds"' in svg
    assert 'obstacle-' not in svg
    assert 'width="600pt"' in svg and 'height="300pt"' in svg


def test_rendering_is_deterministic(wall_scenario):
    first = render_svg(wall_scenario, [straight_log()])
    assert first == render_svg(wall_scenario, [straight_log()])
    assert 'id="obstacle-0"' in first
    for element in ('trajectory', 'start', 'goal'):
        assert f'id="agent-0-{element}"' in first


def test_trajectory_endpoints(open_scenario):
    svg = render_svg(open_scenario, [straight_log()])
    group = re.search(r'<g id="agent-0-trajectory">(.*?)</g>', svg, re.S).group(1)
    path = re.search(r' d="([^"]+)"', group).group(1)
    points = np.array([float(v) for v in re.findall(r'-?\d+(?:\.\d+)?', path)]).reshape(-1, 2)
    expected = world_to_viewport(open_scenario.bounds, 600.0, [[0.0, 0.0], [5.0, 0.0]])
    np.testing.assert_allclose(points[0], expected[0], atol=1e-3)
    np.testing.assert_allclose(points[-1], expected[1], atol=1e-3)


def test_waypoints_and_saving(tmp_path, wall_scenario):
    path = save_svg(tmp_path / 'wall.svg', wall_scenario, waypoints={0: [[-5.0, 0.0], [-1.0, 4.0], [5.0, 0.0]]})
    text = path.read_text()
    assert 'id="agent-0-waypoints"' in text
    assert 'agent-0-trajectory' not in text


def test_rendering_without_tasks_needs_no_agents():
    svg = render_svg(Layout((0.0, 0.0, 4.0, 4.0), ()), [straight_log()])
    assert 'id="agent-0-trajectory"' in svg
    assert 'agent-0-start' not in svg
