import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..errors import Infeasible, ValidationError
from ..geometry import EPS, Vec2, clamp_norm, cross
from .lp2d import HalfPlane, safest_velocity, solve_lp2d

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OrcaParams:
    time_horizon: float = 2.0
    time_horizon_obstacles: float = 2.0
    neighbor_radius: float = 10.0
    max_speed: float = 1.5
    # share of the avoidance effort each agent of a pair takes on
    responsibility: float = 0.5

    def __post_init__(self) -> None:
        if min(self.time_horizon, self.time_horizon_obstacles, self.neighbor_radius, self.max_speed) <= 0:
            raise ValidationError('ORCA parameters must be positive')


def orca_half_plane(rel_position: Vec2, rel_velocity: Vec2, velocity: Vec2, combined_radius: float,
                    time_horizon: float, dt: float, responsibility: float) -> HalfPlane:
    """Permitted-velocity half-plane induced by one neighbour.

    `rel_position` points from the agent to the neighbour and `rel_velocity` is the agent's
    velocity minus the neighbour's.
    """
    dist2 = float(rel_position @ rel_position)
    r2 = combined_radius ** 2
    if dist2 > r2:
        inv_horizon = 1.0 / time_horizon
        w = rel_velocity - inv_horizon * rel_position
        w_len2 = float(w @ w)
        dot1 = float(w @ rel_position)
        if dot1 < 0 and dot1 * dot1 > r2 * w_len2:
            # project on the cut-off circle
            w_len = np.sqrt(w_len2)
            unit_w = w / w_len
            direction = np.array([unit_w[1], -unit_w[0]])
            u = (combined_radius * inv_horizon - w_len) * unit_w
        else:
            # project on a leg of the velocity obstacle
            leg = np.sqrt(dist2 - r2)
            x, y = rel_position
            if float(cross(rel_position, w)) > 0:
                direction = np.array([x * leg - y * combined_radius, x * combined_radius + y * leg]) / dist2
            else:
                direction = -np.array([x * leg + y * combined_radius, -x * combined_radius + y * leg]) / dist2
            u = float(rel_velocity @ direction) * direction - rel_velocity
    else:
        # already overlapping: resolve within one time step
        inv_step = 1.0 / dt
        w = rel_velocity - inv_step * rel_position
        w_len = np.sqrt(float(w @ w))
        unit_w = w / w_len if w_len > EPS else np.array([1.0, 0.0])
        direction = np.array([unit_w[1], -unit_w[0]])
        u = (combined_radius * inv_step - w_len) * unit_w
    return HalfPlane(velocity + responsibility * u, direction)


def orca_velocity(position: Vec2, velocity: Vec2, radius: float,
                  neighbor_positions: np.ndarray, neighbor_velocities: np.ndarray, neighbor_radii: np.ndarray,
                  preferred: Vec2, params: OrcaParams = OrcaParams(), dt: float = 0.1,
                  obstacle_edges: Optional[np.ndarray] = None) -> Vec2:
    """Velocity closest to `preferred` that satisfies every ORCA half-plane.

    Obstacle edges act through their nearest point as static neighbours for which the agent
    takes full responsibility; those constraints are kept strictly if the program is infeasible.
    """
    position = np.asarray(position, dtype=np.float64)
    velocity = np.asarray(velocity, dtype=np.float64)
    preferred = clamp_norm(np.asarray(preferred, dtype=np.float64), params.max_speed)

    lines: List[HalfPlane] = []
    if obstacle_edges is not None and len(obstacle_edges):
        nearest = _nearest_edge_points(position, obstacle_edges)
        for point in nearest:
            rel = point - position
            if float(rel @ rel) > params.neighbor_radius ** 2:
                continue
            lines.append(orca_half_plane(rel, velocity, velocity, radius,
                                         params.time_horizon_obstacles, dt, 1.0))
    num_hard = len(lines)

    if len(neighbor_positions):
        rel_positions = np.asarray(neighbor_positions) - position
        order = np.argsort(np.sum(rel_positions ** 2, axis=-1), kind='stable')
        for j in order:
            if float(rel_positions[j] @ rel_positions[j]) > params.neighbor_radius ** 2:
                continue
            lines.append(orca_half_plane(rel_positions[j], velocity - neighbor_velocities[j], velocity,
                                         radius + float(neighbor_radii[j]), params.time_horizon, dt,
                                         params.responsibility))

    try:
        return solve_lp2d(lines, preferred, params.max_speed)
    except Infeasible as exc:
        logger.debug('ORCA infeasible at constraint %d of %d, taking the safest velocity', exc.index, len(lines))
        return safest_velocity(lines, num_hard, exc.index, exc.partial, params.max_speed)


def _nearest_edge_points(position: Vec2, edges: np.ndarray) -> np.ndarray:
    a, b = edges[:, 0], edges[:, 1]
    d = b - a
    length2 = np.maximum(np.sum(d * d, axis=-1), EPS ** 2)
    t = np.clip(np.sum((position - a) * d, axis=-1) / length2, 0.0, 1.0)
    return a + t[:, None] * d

