"""Expert controllers driving :func:`crowdgen.world.run_simulation`."""
import logging
from typing import Optional

from ..geometry import Vec2, norm, unit
from ..guidance.planner import PlannerConfig
from ..guidance.providers import WaypointGuidance
from ..world import Controller, Scenario, SimConfig, WorldSnapshot, agent_rng
from .orca import OrcaParams, orca_velocity
from .social_force import SocialForceParams, social_force_velocity

logger = logging.getLogger(__name__)


class ExpertController(Controller):
    """Heads for the furthest visible A* waypoint when the scenario has obstacles, else for the goal.

    Observations are the step snapshot itself; experts see the full world state.
    """

    def __init__(self, scenario: Scenario, config: SimConfig = SimConfig(),
                 planner: PlannerConfig = PlannerConfig()) -> None:
        self.scenario = scenario
        self.config = config
        self.waypoints = None
        if scenario.obstacles:
            self.waypoints = WaypointGuidance.for_scenario(scenario, planner, config.max_speed)

    def observe(self, snapshot: WorldSnapshot, index: int) -> WorldSnapshot:
        return snapshot

    def goal_direction(self, snapshot: WorldSnapshot, index: int) -> Vec2:
        if self.waypoints is not None:
            return unit(self.waypoints(snapshot, index))
        return unit(snapshot.scenario.tasks[index].goal - snapshot.states[index].position)


class SocialForceExpert(ExpertController):
    def __init__(self, scenario: Scenario, config: SimConfig = SimConfig(),
                 params: SocialForceParams = SocialForceParams(),
                 planner: PlannerConfig = PlannerConfig()) -> None:
        super().__init__(scenario, config, planner)
        self.params = params

    def decide(self, snapshot: WorldSnapshot, index: int, step: int, seed: int) -> Vec2:
        state = snapshot.states[index]
        positions, _, radii = snapshot.neighbors(index)
        return social_force_velocity(
            state.position, state.velocity, snapshot.scenario.tasks[index].radius, positions, radii,
            snapshot.scenario.obstacle_set, self.goal_direction(snapshot, index), self.params,
            dt=self.config.dt, max_speed=self.config.max_speed, rng=agent_rng(seed, step, index))


class OrcaExpert(ExpertController):
    def __init__(self, scenario: Scenario, config: SimConfig = SimConfig(),
                 params: Optional[OrcaParams] = None,
                 planner: PlannerConfig = PlannerConfig()) -> None:
        super().__init__(scenario, config, planner)
        self.params = params if params is not None else OrcaParams(max_speed=config.max_speed)

    def preferred_velocity(self, snapshot: WorldSnapshot, index: int) -> Vec2:
        # slow down on the final approach instead of overshooting the goal
        remaining = norm(snapshot.scenario.tasks[index].goal - snapshot.states[index].position)
        return self.goal_direction(snapshot, index) * min(self.params.max_speed, remaining / self.config.dt)

    def decide(self, snapshot: WorldSnapshot, index: int, step: int, seed: int) -> Vec2:
        state = snapshot.states[index]
        positions, velocities, radii = snapshot.neighbors(index)
        edges = snapshot.scenario.obstacle_set.edges if snapshot.scenario.obstacles else None
        return orca_velocity(state.position, state.velocity, snapshot.scenario.tasks[index].radius,
                             positions, velocities, radii, self.preferred_velocity(snapshot, index),
                             self.params, dt=self.config.dt, obstacle_edges=edges)


def expert_controller(scenario: Scenario, config: SimConfig = SimConfig(),
                      social_force: SocialForceParams = SocialForceParams(),
                      orca: Optional[OrcaParams] = None,
                      planner: PlannerConfig = PlannerConfig()) -> ExpertController:
    """The controller named by ``scenario.expert``."""
    if scenario.expert == 'orca':
        return OrcaExpert(scenario, config, orca, planner)
    return SocialForceExpert(scenario, config, social_force, planner)
