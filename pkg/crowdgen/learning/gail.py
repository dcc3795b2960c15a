"""Adversarial imitation: discriminator ascent and a KL-bounded clipped policy-gradient step."""
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import torch
from tqdm.auto import tqdm

from ..errors import NonFiniteLoss, ValidationError
from ..perception import FEATURE_SIZE, LocalGuidance, encode, sense
from ..world import Scenario, SimConfig, TrajectoryLog, log_snapshots
from .bc import bc_train
from .config import TrainConfig, TrainTrace
from .networks import Discriminator, PolicyModel, assign_parameters, parameter_vector
from .optim import build_optimizer, compute_gradients
from .rollout import RolloutBatch, rollout

logger = logging.getLogger(__name__)

Pairs = Tuple[np.ndarray, np.ndarray]


def expert_pairs(scenario: Scenario, log: TrajectoryLog, guidance: LocalGuidance,
                 max_speed: float = 1.5) -> Pairs:
    """Featurises every recorded transition of an expert log."""
    features, actions = [], []
    for snapshot, commands in log_snapshots(scenario, log):
        for i, action in commands.items():
            features.append(encode(sense(snapshot, i, guidance, max_speed=max_speed), max_speed=max_speed))
            actions.append(action)
    if not features:
        return np.zeros((0, FEATURE_SIZE)), np.zeros((0, 2))
    return np.stack(features), np.stack(actions)


def discriminator_objective(discriminator: Discriminator, policy_batch: Pairs, expert_batch: Pairs) -> torch.Tensor:
    """E_policy[log D] + E_expert[log(1 - D)]; D is pushed to 1 on policy pairs and 0 on expert pairs."""
    log_d_policy = discriminator.log_d(*policy_batch)
    log_one_minus_d_expert = torch.nn.functional.logsigmoid(-discriminator.logits(*expert_batch))
    return log_d_policy.mean() + log_one_minus_d_expert.mean()


def gail_discriminator_step(discriminator: Discriminator, policy_batch: Pairs, expert_batch: Pairs,
                            rule, index: int = 0) -> float:
    """One ascent step on the inner objective; returns the objective after the step."""
    if len(policy_batch[0]) == 0 or len(expert_batch[0]) == 0:
        raise ValidationError('discriminator step needs non-empty policy and expert batches')
    loss = compute_gradients(rule, lambda: -discriminator_objective(discriminator, policy_batch, expert_batch))
    if not torch.isfinite(loss):
        raise NonFiniteLoss(index, loss.item())
    rule.step()
    with torch.no_grad():
        return float(discriminator_objective(discriminator, policy_batch, expert_batch))


def costs(discriminator: Discriminator, features: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Per-step cost log D(s, a); the policy reward is its negation."""
    with torch.no_grad():
        return discriminator.log_d(features, actions).numpy()


def discounted_returns(rewards: np.ndarray, episode: np.ndarray, agent: np.ndarray, step: np.ndarray,
                       discount: float) -> np.ndarray:
    """Reward-to-go along each (episode, agent) trajectory in step order."""
    returns = np.zeros_like(rewards)
    keys = np.stack([episode, agent], axis=-1)
    for key in np.unique(keys, axis=0):
        rows = np.flatnonzero((keys == key).all(axis=1))
        rows = rows[np.argsort(step[rows], kind='stable')]
        running = 0.0
        for r in rows[::-1]:
            running = rewards[r] + discount * running
            returns[r] = running
    return returns


def advantages(returns: np.ndarray, episode: np.ndarray) -> np.ndarray:
    """Returns minus the per-scenario mean, scaled to unit variance."""
    adv = returns.copy()
    for e in np.unique(episode):
        rows = episode == e
        adv[rows] -= returns[rows].mean()
    std = adv.std()
    return adv / std if std > 1e-12 else adv


def surrogate(policy: PolicyModel, features: torch.Tensor, actions: torch.Tensor, old_log_prob: torch.Tensor,
              adv: torch.Tensor, clip: float, entropy_weight: float = 0.0) -> torch.Tensor:
    """Clipped probability-ratio objective plus the weighted entropy bonus; to be maximised."""
    ratio = torch.exp(policy.log_prob(features, actions) - old_log_prob)
    clipped = torch.clamp(ratio, 1.0 - clip, 1.0 + clip)
    objective = torch.min(ratio * adv, clipped * adv).mean()
    if entropy_weight:
        objective = objective + entropy_weight * policy.entropy()
    return objective


def gail_policy_step(policy: PolicyModel, batch: RolloutBatch, discriminator: Discriminator,
                     config: TrainConfig, rule, index: int = 0) -> Dict[str, float]:
    if len(batch) == 0:
        raise ValidationError('policy step needs a non-empty rollout batch')
    assert policy.sigma > 0, 'policy-gradient steps need a stochastic policy'
    rewards = -costs(discriminator, batch.features, batch.actions)
    returns = discounted_returns(rewards, batch.episode, batch.agent, batch.step, config.discount)
    adv = torch.as_tensor(advantages(returns, batch.episode), dtype=torch.float64)
    features = torch.as_tensor(batch.features, dtype=torch.float64)
    actions = torch.as_tensor(batch.actions, dtype=torch.float64)
    with torch.no_grad():
        old_mean = policy(features)
        old_log_prob = policy.log_prob(features, actions)
    old_params = parameter_vector(policy)

    loss = compute_gradients(rule, lambda: -surrogate(policy, features, actions, old_log_prob, adv,
                                                      config.clip, config.entropy_weight))
    if not torch.isfinite(loss):
        raise NonFiniteLoss(index, loss.item())
    rule.step()

    # backtrack until the mean KL respects the trust region, reverting if it never does
    step = parameter_vector(policy) - old_params
    backtracks = 0
    with torch.no_grad():
        kl = policy.kl(old_mean, policy(features))
        while kl > config.max_kl and backtracks < config.kl_backtracks:
            step = step / 2
            backtracks += 1
            assign_parameters(policy, old_params + step)
            kl = policy.kl(old_mean, policy(features))
        if kl > config.max_kl:
            assign_parameters(policy, old_params)
            kl = torch.zeros((), dtype=torch.float64)
    return {'objective': -loss.item(), 'kl': kl.item(), 'backtracks': backtracks,
            'mean_reward': float(rewards.mean())}


def _sample_rows(rng: np.random.Generator, count: int, size: int) -> np.ndarray:
    return np.sort(rng.choice(count, size=min(size, count), replace=False))


def gail_train(scenarios: Sequence[Scenario], expert_logs: Sequence[TrajectoryLog],
               guidances: Sequence[LocalGuidance], config: TrainConfig = TrainConfig(),
               sim_config: SimConfig = SimConfig(), iterations: Optional[int] = None,
               expert_data: Optional[Pairs] = None, progress: bool = False) -> Tuple[PolicyModel, TrainTrace]:
    """Alternates rollouts, discriminator steps and policy steps.

    `expert_data` overrides the pairs featurised from `expert_logs`. The trace records the
    discriminator objective with the mean rollout reward, KL and backtrack count.
    """
    if len(expert_logs) != len(scenarios) or len(guidances) != len(scenarios):
        raise ValidationError('one expert log and one guidance provider per scenario are required')
    if not scenarios:
        raise ValidationError('GAIL needs at least one scenario')
    if expert_data is None:
        pairs = [expert_pairs(s, log, g, sim_config.max_speed) for s, log, g in zip(scenarios, expert_logs, guidances)]
        expert_data = (np.concatenate([p[0] for p in pairs]), np.concatenate([p[1] for p in pairs]))
    if len(expert_data[0]) == 0:
        raise ValidationError('expert logs hold no transitions')
    iterations = config.gail_iterations if iterations is None else iterations

    policy = PolicyModel.create(config.hidden_sizes, config.exploration_std, config.rng_seed)
    if config.bc_warm_start:
        warm, _ = bc_train(*expert_data, config, policy=policy)
        policy = PolicyModel(warm.mlp, config.exploration_std)
    discriminator = Discriminator(config.hidden_sizes, seed=config.rng_seed + 1)
    policy_rule = build_optimizer(policy, config.gail_learning_rate, config)
    discriminator_rule = build_optimizer(discriminator, config.discriminator_learning_rate, config)
    trace = TrainTrace('objective')

    for iteration in tqdm(range(iterations), disable=not progress, desc='gail'):
        rng = np.random.default_rng([config.rng_seed, iteration])
        chosen = _sample_rows(rng, len(scenarios), config.scenarios_per_iteration)
        _, batch = rollout([scenarios[k] for k in chosen], policy, [guidances[k] for k in chosen],
                           sim_config, seed=config.rng_seed * 1000003 + iteration)
        if len(batch) == 0:
            logger.warning('iteration %d: rollout produced no decisions', iteration)
            continue
        objective = 0.0
        for _ in range(config.discriminator_steps):
            rows = _sample_rows(rng, len(expert_data[0]), len(batch))
            objective = gail_discriminator_step(discriminator, (batch.features, batch.actions),
                                                (expert_data[0][rows], expert_data[1][rows]),
                                                discriminator_rule, iteration)
        diagnostics = gail_policy_step(policy, batch, discriminator, config, policy_rule, iteration)
        trace.record(iteration, objective, mean_reward=diagnostics['mean_reward'], kl=diagnostics['kl'],
                     backtracks=diagnostics['backtracks'])
        if (iteration + 1) % config.log_interval == 0:
            logger.info('gail iteration %d: objective %.4f, mean reward %.4f', iteration + 1,
                        objective, float(np.mean(trace.column('mean_reward')[-config.log_interval:])))
    return policy.as_deterministic(), trace
