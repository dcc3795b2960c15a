"""Local-guidance providers plugged into :func:`crowdgen.perception.sense`."""
import logging
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import NoPath, ValidationError
from ..geometry import Vec2
from ..perception import compass
from ..world import Scenario, TrajectoryLog, WorldSnapshot
from .gp import GpHyperparameters, GpModel, fit_gp, gp_predict
from .planner import PlanGrid, PlannerConfig, astar_plan, build_costmap, local_goal

logger = logging.getLogger(__name__)


class GlobalGuidance(object):
    def __init__(self, max_speed: float = 1.5) -> None:
        self.max_speed = max_speed

    def __call__(self, snapshot: WorldSnapshot, index: int) -> Vec2:
        return compass(snapshot, index, self.max_speed)


class PreferredVelocityGuidance(object):
    """Fixed per-agent preferred velocities, as sampled for R-domain states."""

    def __init__(self, velocities: Mapping[int, Vec2]) -> None:
        self.velocities = {k: np.asarray(v, dtype=np.float64) for k, v in velocities.items()}

    def __call__(self, snapshot: WorldSnapshot, index: int) -> Vec2:
        return self.velocities[index]


class GpGuidance(object):
    """Expert flow prediction at (x, y, step * dt); defers to the compass where the GP is unsure."""

    def __init__(self, model: GpModel, dt: float, max_speed: float = 1.5) -> None:
        self.model = model
        self.dt = dt
        self.max_speed = max_speed

    def __call__(self, snapshot: WorldSnapshot, index: int) -> Vec2:
        position = snapshot.states[index].position
        mean, variance = gp_predict(self.model, (position[0], position[1], snapshot.step * self.dt))
        if np.sqrt(variance) > self.model.hyper.fallback_std:
            return compass(snapshot, index, self.max_speed)
        return mean


class WaypointGuidance(object):
    """Heads for the furthest A* waypoint in sight; waypoints are planned once per scenario."""

    def __init__(self, grid: PlanGrid, max_speed: float = 1.5) -> None:
        self.grid = grid
        self.max_speed = max_speed

    @classmethod
    def for_scenario(cls, scenario: Scenario, config: PlannerConfig = PlannerConfig(),
                     max_speed: float = 1.5) -> 'WaypointGuidance':
        grid = build_costmap(scenario, config.cell_size, config.sigma)
        for k, task in enumerate(scenario.tasks):
            try:
                plan = astar_plan(grid, task.start, task.goal, config.weight, config.hard_threshold)
                grid.waypoints[k] = plan.waypoints
            except NoPath as exc:
                logger.warning('scenario %s agent %d: %s; heading straight for the goal', scenario.id, k, exc)
                grid.waypoints[k] = task.goal[None, :]
        return cls(grid, max_speed)

    def __call__(self, snapshot: WorldSnapshot, index: int) -> Vec2:
        task = snapshot.scenario.tasks[index]
        return local_goal(snapshot.states[index].position, self.grid.waypoints[index],
                          snapshot.scenario.obstacle_set, task.radius, self.max_speed)


def guidance_for(scenario: Scenario, max_speed: float = 1.5, dt: float = 0.1,
                 expert_logs: Optional[Sequence[TrajectoryLog]] = None,
                 gp_hyper: GpHyperparameters = GpHyperparameters(),
                 planner: PlannerConfig = PlannerConfig()):
    """Routes a scenario to its local-guidance source.

    Flow-patterned X scenarios use a GP over their expert logs, G and real-domain scenarios use
    A* waypoints, and obstacle-free R-derived scenarios use the compass.
    """
    if scenario.domain_tag == 'X':
        if not expert_logs:
            raise ValidationError(f'scenario {scenario.id}: GP guidance needs expert logs')
        return GpGuidance(fit_gp(expert_logs, gp_hyper), dt, max_speed)
    if scenario.domain_tag in ('G', 'real'):
        return WaypointGuidance.for_scenario(scenario, planner, max_speed)
    return GlobalGuidance(max_speed)
