"""Policy-driven simulation with per-step (feature, action, noise) records."""
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
import torch

from ..errors import DecisionError, ValidationError
from ..geometry import Vec2
from ..perception import FEATURE_SIZE, LocalGuidance, encode, sense
from ..world import Controller, Scenario, SimConfig, TrajectoryLog, WorldSnapshot, agent_rng, run_simulation
from .networks import PolicyModel

logger = logging.getLogger(__name__)


@dataclass
class RolloutBatch:
    """Flat per-decision records; `episode` indexes the scenario within the rollout."""
    features: np.ndarray
    actions: np.ndarray
    noise: np.ndarray
    episode: np.ndarray
    agent: np.ndarray
    step: np.ndarray

    def __len__(self) -> int:
        return len(self.features)

    @classmethod
    def empty(cls) -> 'RolloutBatch':
        return cls(np.zeros((0, FEATURE_SIZE)), np.zeros((0, 2)), np.zeros((0, 2)),
                   np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    @classmethod
    def concatenate(cls, batches: Sequence['RolloutBatch']) -> 'RolloutBatch':
        if not batches:
            return cls.empty()
        return cls(*(np.concatenate([getattr(b, name) for b in batches]) for name in
                     ('features', 'actions', 'noise', 'episode', 'agent', 'step')))


class PolicyController(Controller):
    """Acts with the policy mean plus Gaussian noise keyed by (seed, step, agent)."""

    def __init__(self, policy: PolicyModel, guidance: LocalGuidance, config: SimConfig = SimConfig(),
                 episode: int = 0) -> None:
        self.policy = policy
        self.guidance = guidance
        self.config = config
        self.episode = episode
        self.records: List[Tuple[np.ndarray, np.ndarray, np.ndarray, int, int]] = []

    def observe(self, snapshot: WorldSnapshot, index: int) -> np.ndarray:
        observation = sense(snapshot, index, self.guidance, max_speed=self.config.max_speed)
        return encode(observation, max_speed=self.config.max_speed)

    def decide_all(self, observations: Mapping[int, np.ndarray], step: int, seed: int) -> Dict[int, Vec2]:
        if not observations:
            return {}
        indices = list(observations)
        try:
            with torch.no_grad():
                means = self.policy(np.stack([observations[i] for i in indices])).numpy()
        except Exception as exc:
            raise DecisionError(indices[0], step, exc) from exc
        decisions = {}
        for k, i in enumerate(indices):
            noise = np.zeros(2)
            if not self.policy.deterministic and self.policy.sigma > 0:
                noise = agent_rng(seed, step, i).standard_normal(2) * self.policy.sigma
            action = means[k] + noise
            self.records.append((observations[i], action, noise, i, step))
            decisions[i] = action
        return decisions

    def batch(self) -> RolloutBatch:
        if not self.records:
            return RolloutBatch.empty()
        features, actions, noise, agents, steps = zip(*self.records)
        return RolloutBatch(np.stack(features), np.stack(actions), np.stack(noise),
                            np.full(len(agents), self.episode, dtype=np.int64),
                            np.array(agents, dtype=np.int64), np.array(steps, dtype=np.int64))


def episode_seed(seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, episode]).generate_state(1)[0])


def rollout(scenarios: Sequence[Scenario], policy: PolicyModel,
            guidance: Union[LocalGuidance, Sequence[LocalGuidance]],
            config: SimConfig = SimConfig(), seed: int = 0) -> Tuple[List[TrajectoryLog], RolloutBatch]:
    """Simulates every scenario under the policy; actions are recorded before clamping."""
    guidances = list(guidance) if isinstance(guidance, (list, tuple)) else [guidance] * len(scenarios)
    if len(guidances) != len(scenarios):
        raise ValidationError(f'{len(guidances)} guidance providers for {len(scenarios)} scenarios')
    logs, batches = [], []
    for episode, (scenario, provider) in enumerate(zip(scenarios, guidances)):
        controller = PolicyController(policy, provider, config, episode)
        logs.append(run_simulation(scenario, controller, replace(config, rng_seed=episode_seed(seed, episode))))
        batches.append(controller.batch())
    return logs, RolloutBatch.concatenate(batches)
