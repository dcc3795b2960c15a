"""Exocentric standard scenarios: six fixed layouts populated at a chosen density."""
import enum
import logging
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import PlacementFailure, ValidationError
from ..geometry import ObstacleSet, Polygon, Vec2, norm
from ..world import AgentTask, Bounds, Scenario

logger = logging.getLogger(__name__)

AGENT_RADIUS = 0.5
PLACEMENT_ATTEMPTS = 10000
MAX_DENSITY = 50
DEFAULT_DENSITIES = (10, 20, 30, 40, 50)

ROOM_SIZE = 20.0
WALL_THICKNESS = 0.5
EVACUATION1_DOORWAY = 2.4
EVACUATION2_DOORWAY = 1.4
HALLWAY_WIDTH = 8.0
HALLWAY_LENGTH = 30.0
CIRCLE_RADIUS = 10.0


class StandardKind(enum.Enum):
    Evacuation1 = 'Evacuation1'
    Evacuation2 = 'Evacuation2'
    BottleneckSqueeze = 'BottleneckSqueeze'
    ConcentricCircles = 'ConcentricCircles'
    HallwayTwoWay = 'HallwayTwoWay'
    HallwayFourWay = 'HallwayFourWay'


Sampler = Callable[[np.random.Generator], Vec2]


def box(xmin: float, xmax: float, ymin: float, ymax: float) -> Sampler:
    return lambda rng: rng.uniform((xmin, ymin), (xmax, ymax))


def place_discs(rng: np.random.Generator, samplers: Sequence[Sampler], obstacles: ObstacleSet,
                radius: float = AGENT_RADIUS, separate: bool = True,
                attempts: int = PLACEMENT_ATTEMPTS, clearance: Optional[float] = None) -> List[Vec2]:
    """Rejection-samples one disc centre per sampler, clear of obstacles and, if `separate`, of each other."""
    clearance = radius if clearance is None else clearance
    placed: List[Vec2] = []
    for k, sampler in enumerate(samplers):
        for _ in range(attempts):
            point = np.asarray(sampler(rng), dtype=np.float64)
            if obstacles.clearance(point)[0] < clearance:
                continue
            if separate and placed and np.min(norm(np.asarray(placed) - point)) < 2 * radius:
                continue
            placed.append(point)
            break
        else:
            raise PlacementFailure(f'could not place disc {k} of {len(samplers)} in {attempts} attempts')
    return placed


def _room(doorway: float) -> Tuple[List[Polygon], Dict]:
    h, t = ROOM_SIZE / 2, WALL_THICKNESS
    walls = [
        Polygon.rectangle(-h - t, -h - t, h + t, -h),
        Polygon.rectangle(-h - t, h, h + t, h + t),
        Polygon.rectangle(-h - t, -h, -h, h),
        Polygon.rectangle(h, -h, h + t, -doorway / 2),
        Polygon.rectangle(h, doorway / 2, h + t, h),
    ]
    meta = {'room_size': ROOM_SIZE, 'wall_thickness': t, 'doorway_width': doorway,
            'doorway': [h, -doorway / 2, h + t, doorway / 2]}
    return walls, meta


def _hallway_walls() -> List[Polygon]:
    h, w, t = HALLWAY_LENGTH / 2, HALLWAY_WIDTH / 2, WALL_THICKNESS
    return [Polygon.rectangle(-h, w, h, w + t), Polygon.rectangle(-h, -w - t, h, -w)]


def layout(kind: StandardKind) -> Tuple[Bounds, List[Polygon], Dict]:
    """Bounds, obstacles and recorded dimensions of a kind; independent of density and seed."""
    h, w = HALLWAY_LENGTH / 2, HALLWAY_WIDTH / 2
    if kind in (StandardKind.Evacuation1, StandardKind.Evacuation2):
        doorway = EVACUATION1_DOORWAY if kind is StandardKind.Evacuation1 else EVACUATION2_DOORWAY
        walls, meta = _room(doorway)
        half = ROOM_SIZE / 2 + WALL_THICKNESS
        return (-half, -half, half + 12.0, half), walls, meta
    if kind is StandardKind.BottleneckSqueeze:
        # open waiting area on the left, hallway entrance at x = -h
        blocks = [Polygon.rectangle(-h, w, h, 10.0), Polygon.rectangle(-h, -10.0, h, -w)]
        return (-h - 10.0, -10.0, h + 5.0, 10.0), blocks, {'hallway_width': HALLWAY_WIDTH, 'hallway_length': HALLWAY_LENGTH}
    if kind is StandardKind.ConcentricCircles:
        r = CIRCLE_RADIUS + 2.0
        return (-r, -r, r, r), [], {'circle_radius': CIRCLE_RADIUS}
    if kind is StandardKind.HallwayTwoWay:
        t = WALL_THICKNESS
        return (-h, -w - t, h, w + t), _hallway_walls(), {'hallway_width': HALLWAY_WIDTH, 'hallway_length': HALLWAY_LENGTH}
    if kind is StandardKind.HallwayFourWay:
        corners = [Polygon.rectangle(x0, y0, x1, y1)
                   for x0, x1 in ((-h, -w), (w, h)) for y0, y1 in ((-h, -w), (w, h))]
        return (-h, -h, h, h), corners, {'hallway_width': HALLWAY_WIDTH, 'hallway_length': HALLWAY_LENGTH}
    raise ValidationError(f'unknown standard kind {kind!r}')


def _tasks(kind: StandardKind, density: int, obstacles: ObstacleSet,
           rng: np.random.Generator) -> List[Tuple[Vec2, Vec2]]:
    h, w = HALLWAY_LENGTH / 2, HALLWAY_WIDTH / 2
    inner = ROOM_SIZE / 2 - AGENT_RADIUS
    lane = w - AGENT_RADIUS - 0.1
    if kind in (StandardKind.Evacuation1, StandardKind.Evacuation2):
        starts = place_discs(rng, [box(-inner, inner, -inner, inner)] * density, obstacles)
        if kind is StandardKind.Evacuation1:
            goals = place_discs(rng, [box(14.0, 21.0, -inner, inner)] * density, obstacles)
        else:
            goals = [np.array([ROOM_SIZE / 2 + 8.0, 0.0])] * density
        return list(zip(starts, goals))
    if kind is StandardKind.BottleneckSqueeze:
        starts = place_discs(rng, [box(-h - 9.0, -h - 1.0, -9.0, 9.0)] * density, obstacles)
        return [(s, np.array([h + 3.0, 0.0])) for s in starts]
    if kind is StandardKind.ConcentricCircles:
        offset = rng.uniform(0.0, 2 * np.pi)
        angles = offset + 2 * np.pi * np.arange(density) / density
        starts = CIRCLE_RADIUS * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        return [(s, -s) for s in starts]
    if kind is StandardKind.HallwayTwoWay:
        directions = np.arange(density) % 2
        samplers = [box(-h + 1.0, -h + 8.0, -lane, lane) if d == 0 else box(h - 8.0, h - 1.0, -lane, lane)
                    for d in directions]
        starts = place_discs(rng, samplers, obstacles)
        return [(s, np.array([-s[0], s[1]])) for s in starts]
    if kind is StandardKind.HallwayFourWay:
        arms = [box(-h + 1.0, -h + 8.0, -lane, lane), box(h - 8.0, h - 1.0, -lane, lane),
                box(-lane, lane, -h + 1.0, -h + 8.0), box(-lane, lane, h - 8.0, h - 1.0)]
        samplers = [arms[k % 4] for k in range(density)]
        starts = place_discs(rng, samplers, obstacles)
        tasks = []
        for k, s in enumerate(starts):
            # travel to the opposite arm, keeping the lateral offset
            goal = np.array([-s[0], s[1]]) if k % 4 < 2 else np.array([s[0], -s[1]])
            tasks.append((s, goal))
        return tasks
    raise ValidationError(f'unknown standard kind {kind!r}')


def build_standard(kind: StandardKind, density: int, seed: int = 0, expert: str = 'social_force',
                   radius: float = AGENT_RADIUS) -> Scenario:
    kind = StandardKind(kind)
    if not 1 <= density <= MAX_DENSITY:
        raise ValidationError(f'density must lie in [1, {MAX_DENSITY}], got {density}')
    bounds, obstacles, meta = layout(kind)
    rng = np.random.default_rng(seed)
    pairs = _tasks(kind, density, ObstacleSet(obstacles), rng)
    tasks = tuple(AgentTask(start, goal, radius) for start, goal in pairs)
    return Scenario(id=f'{kind.value}-d{density}-s{seed}', bounds=bounds, obstacles=tuple(obstacles),
                    tasks=tasks, domain_tag='X', expert=expert,
                    meta={'kind': kind.value, 'density': density, 'seed': seed, **meta})


def standard_suite(kinds: Optional[Sequence[StandardKind]] = None,
                   densities: Sequence[int] = DEFAULT_DENSITIES,
                   variations: int = 3, seed: int = 0, expert: str = 'social_force') -> Iterator[Scenario]:
    """Every (kind, density) at `variations` seeds ``seed, seed + 1, ...``."""
    for kind in kinds if kinds is not None else list(StandardKind):
        for density in densities:
            for v in range(variations):
                yield build_standard(kind, density, seed + v, expert)
