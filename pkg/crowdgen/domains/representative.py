"""Egocentric representative scenarios: random convex obstacles with A*-reachable agent tasks."""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np

from ..errors import NoPath, PlacementFailure, ValidationError
from ..geometry import ObstacleSet, Polygon, norm
from ..guidance.planner import Layout, PlannerConfig, astar_plan, build_costmap
from ..world import AgentTask, Scenario
from .standard import AGENT_RADIUS, PLACEMENT_ATTEMPTS, box, place_discs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorConfig:
    obstacle_count: Tuple[int, int] = (3, 8)
    vertex_count: Tuple[int, int] = (3, 6)
    circumradius: Tuple[float, float] = (1.0, 4.0)
    agent_count: Tuple[int, int] = (4, 12)
    area_size: float = 30.0
    min_travel: float = 5.0
    # extra clearance so that start and goal cells stay passable on the blurred costmap
    margin: float = 0.5
    expert: str = 'social_force'

    def __post_init__(self) -> None:
        for lo, hi in (self.obstacle_count, self.vertex_count, self.agent_count, self.circumradius):
            if lo > hi or lo < 0:
                raise ValidationError(f'invalid range ({lo}, {hi})')
        if self.vertex_count[0] < 3 or self.agent_count[0] < 1 or self.circumradius[0] <= 0:
            raise ValidationError('need at least 3 vertices, 1 agent and a positive circumradius')
        if 2 * self.circumradius[1] >= self.area_size:
            raise ValidationError('obstacles do not fit in the area')


def random_convex_polygon(rng: np.random.Generator, center: np.ndarray, radius: float, vertices: int) -> Polygon:
    """Vertices at sorted random angles on a circle, which is always convex."""
    while True:
        angles = np.sort(rng.uniform(0.0, 2 * np.pi, size=vertices))
        # reject slivers whose vertices crowd onto one half of the circle
        gaps = np.diff(np.concatenate([angles, angles[:1] + 2 * np.pi]))
        if gaps.max() < np.pi:
            break
    return Polygon(center + radius * np.stack([np.cos(angles), np.sin(angles)], axis=-1))


def sample_representative(seed: int, config: GeneratorConfig = GeneratorConfig(),
                          planner: PlannerConfig = PlannerConfig()) -> Scenario:
    rng = np.random.default_rng(seed)
    half = config.area_size / 2
    bounds = (-half, -half, half, half)

    polygons: List[Polygon] = []
    for _ in range(rng.integers(config.obstacle_count[0], config.obstacle_count[1] + 1)):
        radius = rng.uniform(*config.circumradius)
        center = rng.uniform(-half + radius, half - radius, size=2)
        polygons.append(random_convex_polygon(rng, center, radius,
                                              int(rng.integers(config.vertex_count[0], config.vertex_count[1] + 1))))
    obstacles = ObstacleSet(polygons)

    grid = build_costmap(Layout(bounds, tuple(polygons)), planner.cell_size, planner.sigma)

    inner = half - AGENT_RADIUS
    region = box(-inner, inner, -inner, inner)
    clearance = AGENT_RADIUS + config.margin
    count = int(rng.integers(config.agent_count[0], config.agent_count[1] + 1))
    starts: List[np.ndarray] = []
    tasks: List[AgentTask] = []
    for k in range(count):
        for _ in range(PLACEMENT_ATTEMPTS):
            start = place_discs(rng, [region], obstacles, clearance=clearance)[0]
            if starts and np.min(norm(np.asarray(starts) - start)) < 2 * AGENT_RADIUS:
                continue
            goal = place_discs(rng, [region], obstacles, clearance=clearance)[0]
            if norm(goal - start) < config.min_travel:
                continue
            try:
                astar_plan(grid, start, goal, planner.weight, planner.hard_threshold)
            except NoPath:
                continue
            starts.append(start)
            tasks.append(AgentTask(start, goal, AGENT_RADIUS))
            break
        else:
            raise PlacementFailure(f'representative scenario {seed}: no reachable task for agent {k}')

    return Scenario(id=f'G-{seed}', bounds=bounds, obstacles=tuple(polygons), tasks=tuple(tasks),
                    domain_tag='G', expert=config.expert, meta={'seed': seed, 'area_size': config.area_size})


def representative_split(train: int, test: int, seed: int = 0) -> Tuple[List[int], List[int]]:
    """Disjoint seed ranges for training and testing scenarios."""
    return list(range(seed, seed + train)), list(range(seed + train, seed + train + test))


def representative_scenarios(seeds: List[int], config: GeneratorConfig = GeneratorConfig()) -> Iterator[Scenario]:
    for seed in seeds:
        yield sample_representative(seed, config)
