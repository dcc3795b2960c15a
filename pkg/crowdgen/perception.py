"""Egocentric state featurization: range map, radial-velocity map and guidance velocities.

Feature layout (schema version 1, 724 entries)::

    [0, 360)    range_map / max_range                     bin k = world heading k degrees
    [360, 720)  radial_velocity_map / (2 * max_speed)     positive = receding
    [720, 722)  local_guidance / max_speed
    [722, 724)  global_guidance / max_speed

R-domain dataset files use exactly this layout.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Vec2, cast_rays, clamp_norm, unit
from .world import WorldSnapshot

RAY_COUNT = 360
FEATURE_SCHEMA_VERSION = 1
FEATURE_SIZE = 2 * RAY_COUNT + 4
MAX_RANGE = 10.0

RAY_ANGLES = np.deg2rad(np.arange(RAY_COUNT, dtype=np.float64))
RAY_DIRECTIONS = np.stack([np.cos(RAY_ANGLES), np.sin(RAY_ANGLES)], axis=-1)

# Local guidance provider: (snapshot, agent index) -> velocity hint.
LocalGuidance = Callable[[WorldSnapshot, int], Vec2]


@dataclass(frozen=True, eq=False)
class Observation:
    range_map: np.ndarray
    radial_velocity_map: np.ndarray
    local_guidance: Vec2
    global_guidance: Vec2


def compass(snapshot: WorldSnapshot, index: int, max_speed: float) -> Vec2:
    """Straight-to-goal heading scaled to `max_speed`."""
    state = snapshot.states[index]
    return unit(snapshot.scenario.tasks[index].goal - state.position) * max_speed


def sense(snapshot: WorldSnapshot, index: int, guidance: LocalGuidance,
          max_range: float = MAX_RANGE, max_speed: float = 1.5) -> Observation:
    assert snapshot.is_active(index), f'agent {index} is not active at step {snapshot.step}'
    state = snapshot.states[index]
    centers, velocities, radii = snapshot.neighbors(index)
    hits = cast_rays(state.position, RAY_ANGLES, snapshot.scenario.obstacle_set,
                     centers, radii, max_range)

    relative = np.zeros((RAY_COUNT, 2))
    relative[hits.kind == 1] = -state.velocity
    disc_hits = hits.kind == 2
    if np.any(disc_hits):
        relative[disc_hits] = velocities[hits.index[disc_hits]] - state.velocity
    radial = np.sum(relative * RAY_DIRECTIONS, axis=-1)

    local = clamp_norm(np.asarray(guidance(snapshot, index), dtype=np.float64), max_speed)
    return Observation(
        range_map=hits.distance,
        radial_velocity_map=radial,
        local_guidance=local,
        global_guidance=compass(snapshot, index, max_speed))


def encode(observation: Observation, max_range: float = MAX_RANGE, max_speed: float = 1.5) -> np.ndarray:
    return np.concatenate([
        observation.range_map / max_range,
        np.clip(observation.radial_velocity_map / (2 * max_speed), -1.0, 1.0),
        observation.local_guidance / max_speed,
        observation.global_guidance / max_speed,
    ])


def decode(features: np.ndarray, max_range: float = MAX_RANGE, max_speed: float = 1.5) -> Observation:
    features = np.asarray(features, dtype=np.float64)
    assert features.shape == (FEATURE_SIZE,), f'expected {FEATURE_SIZE} features, got {features.shape}'
    return Observation(
        range_map=features[:RAY_COUNT] * max_range,
        radial_velocity_map=features[RAY_COUNT:2 * RAY_COUNT] * 2 * max_speed,
        local_guidance=features[2 * RAY_COUNT:2 * RAY_COUNT + 2] * max_speed,
        global_guidance=features[2 * RAY_COUNT + 2:] * max_speed)
