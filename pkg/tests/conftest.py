import numpy as np
import pytest

from crowdgen.geometry import Polygon
from crowdgen.world import AgentTask, Scenario


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running acceptance checks')


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def open_scenario():
    """Two agents swapping places in an empty 20 m square."""
    tasks = (AgentTask((-5.0, 0.0), (5.0, 0.0)), AgentTask((5.0, 0.0), (-5.0, 0.0)))
    return Scenario('open', (-10.0, -10.0, 10.0, 10.0), (), tasks, 'X', meta={'kind': 'Test', 'density': 2})


@pytest.fixture
def wall_scenario():
    """One agent that has to pass a wall standing between start and goal."""
    wall = Polygon.rectangle(-0.5, -3.0, 0.5, 3.0)
    return Scenario('wall', (-10.0, -10.0, 10.0, 10.0), (wall,), (AgentTask((-5.0, 0.0), (5.0, 0.0)),), 'G')


@pytest.fixture(autouse=True)
def single_process(monkeypatch):
    monkeypatch.setenv('CROWDGEN_THREADS', '1')
