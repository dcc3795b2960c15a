import heapq
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Tuple, Union

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import NoPath, ValidationError
from ..geometry import EPS, ObstacleSet, Vec2, segment_distances, unit
from ..world import Scenario

logger = logging.getLogger(__name__)

MOVES = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass(frozen=True)
class PlannerConfig:
    cell_size: float = 0.5
    sigma: float = 0.5
    weight: float = 10.0
    hard_threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.cell_size <= 0 or self.sigma < 0:
            raise ValidationError('cell size must be positive and sigma non-negative')


@dataclass(eq=False)
class PlanGrid:
    """Obstacle-probability map; row index is y, column index is x."""
    origin: Tuple[float, float]
    cell_size: float
    occupancy: np.ndarray
    waypoints: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.occupancy.shape

    def cell_of(self, point: Vec2) -> Tuple[int, int]:
        col = int(math.floor((point[0] - self.origin[0]) / self.cell_size))
        row = int(math.floor((point[1] - self.origin[1]) / self.cell_size))
        rows, cols = self.shape
        return min(max(row, 0), rows - 1), min(max(col, 0), cols - 1)

    def center_of(self, row: int, col: int) -> Vec2:
        return np.array([self.origin[0] + (col + 0.5) * self.cell_size,
                         self.origin[1] + (row + 0.5) * self.cell_size])


class Layout(NamedTuple):
    """Obstacle layout of a scenario without its agents."""
    bounds: Tuple[float, float, float, float]
    obstacles: Tuple


class Plan(NamedTuple):
    waypoints: np.ndarray
    cells: List[Tuple[int, int]]
    cost: float


def rasterize(scenario: Union[Scenario, Layout], cell_size: float) -> PlanGrid:
    """Binary occupancy: 1 where the cell centre lies inside an obstacle."""
    xmin, ymin, xmax, ymax = scenario.bounds
    cols = int(math.ceil((xmax - xmin) / cell_size - EPS))
    rows = int(math.ceil((ymax - ymin) / cell_size - EPS))
    xs = xmin + (np.arange(cols) + 0.5) * cell_size
    ys = ymin + (np.arange(rows) + 0.5) * cell_size
    centers = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    occupied = np.zeros(len(centers), dtype=bool)
    for polygon in scenario.obstacles:
        occupied |= polygon.contains(centers)
    return PlanGrid(origin=(xmin, ymin), cell_size=cell_size,
                    occupancy=occupied.reshape(rows, cols).astype(np.float64))


def build_costmap(scenario: Union[Scenario, Layout], cell_size: float = 0.5, sigma: float = 0.5) -> PlanGrid:
    """Gaussian-blurred binary layout, giving an obstacle-probability halo around every obstacle."""
    if cell_size <= 0:
        raise ValidationError('cell size must be positive')
    grid = rasterize(scenario, cell_size)
    sigma_cells = sigma / cell_size
    if sigma_cells > 1e-6:
        grid.occupancy = np.clip(gaussian_filter(grid.occupancy, sigma_cells, mode='constant', cval=0.0), 0.0, 1.0)
    return grid


def astar_plan(grid: PlanGrid, start: Vec2, goal: Vec2, weight: float = 10.0, hard_threshold: float = 0.5) -> Plan:
    """8-connected A* over the costmap.

    Entering a cell of probability p over a step of length l costs ``l * (1 + weight * p)``;
    cells at or above `hard_threshold` are impassable and diagonal moves may not cut the corner
    of an impassable cell.
    """
    occupancy = grid.occupancy
    rows, cols = occupancy.shape
    source, target = grid.cell_of(start), grid.cell_of(goal)
    if occupancy[source] >= hard_threshold or occupancy[target] >= hard_threshold:
        raise NoPath(f'start {source} or goal {target} lies in an occupied cell')

    def heuristic(cell: Tuple[int, int]) -> float:
        return grid.cell_size * math.hypot(cell[0] - target[0], cell[1] - target[1])

    def passable(row: int, col: int) -> bool:
        return 0 <= row < rows and 0 <= col < cols and occupancy[row, col] < hard_threshold

    best = {source: 0.0}
    parent: Dict[Tuple[int, int], Tuple[int, int]] = {}
    frontier = [(heuristic(source), 0.0, source)]
    closed = set()
    while frontier:
        _, cost, cell = heapq.heappop(frontier)
        if cell in closed:
            continue
        if cell == target:
            path = [cell]
            while path[-1] != source:
                path.append(parent[path[-1]])
            path.reverse()
            waypoints = np.array([grid.center_of(*c) for c in path])
            return Plan(waypoints=waypoints, cells=path, cost=cost)
        closed.add(cell)
        for dr, dc in MOVES:
            row, col = cell[0] + dr, cell[1] + dc
            if not passable(row, col):
                continue
            if dr and dc and not (passable(cell[0] + dr, cell[1]) and passable(cell[0], cell[1] + dc)):
                continue
            step = grid.cell_size * math.hypot(dr, dc)
            new_cost = cost + step * (1.0 + weight * occupancy[row, col])
            if new_cost < best.get((row, col), math.inf):
                best[(row, col)] = new_cost
                parent[(row, col)] = cell
                heapq.heappush(frontier, (new_cost + heuristic((row, col)), new_cost, (row, col)))
    raise NoPath(f'goal cell {target} unreachable from {source}')


def visible_waypoint(position: Vec2, waypoints: np.ndarray, obstacles: ObstacleSet, radius: float) -> int:
    """Index of the furthest waypoint whose sight line clears every edge by more than `radius`.

    Falls back to the nearest waypoint when none is visible.
    """
    assert len(waypoints) > 0
    if not len(obstacles.edges):
        return len(waypoints) - 1
    position = np.asarray(position, dtype=np.float64)
    edges = obstacles.edges
    clearance = segment_distances(position[None, None, :], waypoints[:, None, :],
                                  edges[None, :, 0], edges[None, :, 1]).min(axis=1)
    visible = np.flatnonzero(clearance > radius)
    if len(visible):
        return int(visible[-1])
    return int(np.argmin(np.linalg.norm(waypoints - position, axis=-1)))


def local_goal(position: Vec2, waypoints: np.ndarray, obstacles: ObstacleSet,
               radius: float = 0.5, max_speed: float = 1.5) -> Vec2:
    index = visible_waypoint(position, waypoints, obstacles, radius)
    return unit(waypoints[index] - np.asarray(position, dtype=np.float64)) * max_speed


def write_pgm(grid: PlanGrid, path: Union[str, Path]) -> None:
    """Binary PGM, white = free, black = certain obstacle, top row = largest y."""
    pixels = np.round((1.0 - grid.occupancy[::-1]) * 255).astype(np.uint8)
    rows, cols = pixels.shape
    with open(path, 'wb') as fh:
        fh.write(f'P5\n{cols} {rows}\n255\n'.encode('ascii'))
        fh.write(pixels.tobytes())
