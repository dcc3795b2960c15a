from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ValidationError
from ..geometry import EPS, ObstacleSet, Vec2, clamp_norm, norm, point_segment_distances


@dataclass(frozen=True)
class SocialForceParams:
    relaxation_time: float = 0.5
    desired_speed: float = 1.34
    repulsion_strength: float = 2.0
    repulsion_range: float = 0.3
    obstacle_strength: float = 4.0
    obstacle_range: float = 0.2
    # edges further away than this exert no force
    obstacle_cutoff: float = 3.0

    def __post_init__(self) -> None:
        if min(self.relaxation_time, self.desired_speed, self.repulsion_strength, self.repulsion_range,
               self.obstacle_strength, self.obstacle_range, self.obstacle_cutoff) <= 0:
            raise ValidationError('social force parameters must be positive')


def _random_unit(rng: np.random.Generator) -> Vec2:
    angle = rng.uniform(0.0, 2 * np.pi)
    return np.array([np.cos(angle), np.sin(angle)])


def social_force_acceleration(position: Vec2, velocity: Vec2, radius: float,
                              neighbor_positions: np.ndarray, neighbor_radii: np.ndarray,
                              obstacles: Optional[ObstacleSet], goal_direction: Vec2,
                              params: SocialForceParams = SocialForceParams(),
                              rng: Optional[np.random.Generator] = None) -> Vec2:
    """Goal attraction plus exponential repulsion from neighbours and nearby obstacle edges."""
    position = np.asarray(position, dtype=np.float64)
    force = (params.desired_speed * np.asarray(goal_direction, dtype=np.float64) - velocity) / params.relaxation_time

    if len(neighbor_positions):
        diff = position - np.asarray(neighbor_positions, dtype=np.float64)
        dist = norm(diff)
        for k in np.flatnonzero(dist < EPS):
            # coincident centres repel along a seeded random direction
            diff[k] = _random_unit(rng if rng is not None else np.random.default_rng(0))
            dist[k] = 0.0
        normals = diff / np.maximum(norm(diff), EPS)[:, None]
        magnitude = params.repulsion_strength * np.exp((radius + np.asarray(neighbor_radii) - dist) / params.repulsion_range)
        force = force + np.sum(magnitude[:, None] * normals, axis=0)

    if obstacles is not None and len(obstacles.edges):
        a, b = obstacles.edges[:, 0], obstacles.edges[:, 1]
        d = b - a
        t = np.clip(np.sum((position - a) * d, axis=-1) / np.maximum(np.sum(d * d, axis=-1), EPS ** 2), 0.0, 1.0)
        nearest = a + t[:, None] * d
        dist = point_segment_distances(position, a, b)
        near = dist < params.obstacle_cutoff
        if np.any(near):
            away = position - nearest
            outward = np.stack([d[:, 1], -d[:, 0]], axis=-1) / np.maximum(norm(d), EPS)[:, None]
            normals = np.where((dist < EPS)[:, None], outward, away / np.maximum(dist, EPS)[:, None])
            containing = obstacles.inside(position)
            if containing >= 0:
                # from inside, the nearest boundary point is the way out
                flip = obstacles.owner == containing
                normals[flip & (dist >= EPS)] *= -1.0
            magnitude = params.obstacle_strength * np.exp((radius - dist) / params.obstacle_range)
            force = force + np.sum((magnitude * near)[:, None] * normals, axis=0)
    return force


def social_force_velocity(position: Vec2, velocity: Vec2, radius: float,
                          neighbor_positions: np.ndarray, neighbor_radii: np.ndarray,
                          obstacles: Optional[ObstacleSet], goal_direction: Vec2,
                          params: SocialForceParams = SocialForceParams(), dt: float = 0.1,
                          max_speed: float = 1.5, rng: Optional[np.random.Generator] = None) -> Vec2:
    acceleration = social_force_acceleration(position, velocity, radius, neighbor_positions, neighbor_radii,
                                             obstacles, goal_direction, params, rng)
    return clamp_norm(np.asarray(velocity, dtype=np.float64) + dt * acceleration, max_speed)
