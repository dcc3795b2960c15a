"""Egocentric random domain: independent (state, ORCA action) samples around one reference agent."""
import logging
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import ValidationError
from ..experts.orca import OrcaParams, orca_velocity
from ..geometry import ObstacleSet, Vec2, heading
from ..guidance.providers import PreferredVelocityGuidance
from ..perception import FEATURE_SIZE, Observation, encode, sense
from ..utils import parallel_map
from ..world import AgentState, AgentTask, Scenario, WorldSnapshot
from .standard import AGENT_RADIUS, place_discs

logger = logging.getLogger(__name__)

Seed = Union[int, Sequence[int]]


@dataclass(frozen=True)
class RandomPairConfig:
    neighbor_count: Tuple[int, int] = (0, 8)
    neighbor_range: float = 10.0
    max_speed: float = 1.5
    radius: float = AGENT_RADIUS

    def __post_init__(self) -> None:
        lo, hi = self.neighbor_count
        if not 0 <= lo <= hi:
            raise ValidationError(f'invalid neighbour count range {self.neighbor_count}')
        if self.neighbor_range <= 2 * self.radius or self.max_speed <= 0:
            raise ValidationError('neighbour range must exceed one agent diameter and max speed be positive')


@dataclass(frozen=True, eq=False)
class RandomStatePair:
    observation: Observation
    expert_action: Vec2

    @property
    def features(self) -> np.ndarray:
        return encode(self.observation)


def _random_velocity(rng: np.random.Generator, max_speed: float) -> Vec2:
    return rng.uniform(0.0, max_speed) * heading(rng.uniform(0.0, 2 * np.pi))


def _disc_sampler(range_: float):
    def sample(rng: np.random.Generator) -> Vec2:
        # uniform over the disc area
        return np.sqrt(rng.uniform()) * range_ * heading(rng.uniform(0.0, 2 * np.pi))
    return sample


def sample_random_pair(seed: Seed, config: RandomPairConfig = RandomPairConfig(),
                       orca: Optional[OrcaParams] = None) -> RandomStatePair:
    """Reference agent at the origin among uniformly sampled neighbours; the action is ORCA's choice."""
    rng = np.random.default_rng(seed)
    orca = orca if orca is not None else OrcaParams(max_speed=config.max_speed)
    count = int(rng.integers(config.neighbor_count[0], config.neighbor_count[1] + 1))
    sampler = _disc_sampler(config.neighbor_range)
    centers = place_discs(rng, [lambda _: np.zeros(2)] + [sampler] * count, ObstacleSet(()), config.radius)

    preferred = _random_velocity(rng, config.max_speed)
    velocities = [_random_velocity(rng, config.max_speed) for _ in centers]
    extent = config.neighbor_range + 2 * config.radius
    tasks = tuple(AgentTask(c, c + v * 10.0 if k else c + preferred * 10.0, config.radius)
                  for k, (c, v) in enumerate(zip(centers, velocities)))
    scenario = Scenario(id='R', bounds=(-extent - 15, -extent - 15, extent + 15, extent + 15),
                        obstacles=(), tasks=tasks, domain_tag='R-derived', expert='orca')
    snapshot = WorldSnapshot(scenario, tuple(AgentState(c, v) for c, v in zip(centers, velocities)), 0)

    observation = sense(snapshot, 0, PreferredVelocityGuidance({0: preferred}), max_speed=config.max_speed)
    observation = replace(observation, global_guidance=observation.local_guidance)
    positions, neighbor_velocities, radii = snapshot.neighbors(0)
    action = orca_velocity(centers[0], velocities[0], config.radius, positions, neighbor_velocities, radii,
                           preferred, orca)
    return RandomStatePair(observation, action)


def _pair_arrays(seed: Seed, config: RandomPairConfig) -> Tuple[np.ndarray, np.ndarray]:
    pair = sample_random_pair(seed, config)
    return encode(pair.observation, max_speed=config.max_speed), pair.expert_action


def build_random_dataset(count: int, seed: int = 0, config: RandomPairConfig = RandomPairConfig(),
                         workers: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """`count` pairs keyed by ``(seed, k)``, as a feature matrix and an action matrix."""
    if count < 0:
        raise ValidationError('pair count must be non-negative')
    pairs = parallel_map(partial(_pair_arrays, config=config), [(seed, k) for k in range(count)], workers)
    logger.info('sampled %d random-domain pairs', count)
    if not pairs:
        return np.zeros((0, FEATURE_SIZE)), np.zeros((0, 2))
    features, actions = zip(*pairs)
    return np.stack(features), np.stack(actions)


def dataset_columns() -> List[str]:
    return [f'f{k}' for k in range(FEATURE_SIZE)] + ['ax', 'ay']


def save_dataset(path: Union[str, Path], features: np.ndarray, actions: np.ndarray) -> None:
    """`.npz` (arrays ``features`` and ``actions``) or CSV rows ``f0..f723,ax,ay``."""
    path = Path(path)
    if features.shape[1:] != (FEATURE_SIZE,) or actions.shape != (len(features), 2):
        raise ValidationError(f'dataset arrays have shapes {features.shape} and {actions.shape}')
    if path.suffix == '.npz':
        np.savez_compressed(path, features=features, actions=actions)
    else:
        frame = pd.DataFrame(np.concatenate([features, actions], axis=1), columns=dataset_columns())
        frame.to_csv(path, index=False, float_format='%.6f', lineterminator='\n')


def load_dataset(path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    if path.suffix == '.npz':
        with np.load(path) as data:
            return data['features'], data['actions']
    frame = pd.read_csv(path)
    if list(frame.columns) != dataset_columns():
        raise ValidationError(f'{path}: unexpected dataset columns')
    values = frame.to_numpy(dtype=np.float64)
    return values[:, :FEATURE_SIZE], values[:, FEATURE_SIZE:]
