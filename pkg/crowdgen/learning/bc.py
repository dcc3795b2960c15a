"""Behaviour cloning: minibatch regression of expert actions on state features."""
import logging
from typing import Optional, Tuple

import numpy as np
import torch
from tqdm.auto import tqdm

from ..errors import NonFiniteLoss, ValidationError
from .config import TrainConfig, TrainTrace
from .networks import PolicyModel
from .optim import build_optimizer, compute_gradients

logger = logging.getLogger(__name__)


def minibatches(count: int, batch_size: int, iterations: int, seed: int):
    """Indices of `iterations` minibatches drawn epoch-wise without replacement."""
    generator = torch.Generator().manual_seed(seed)
    batch_size = min(batch_size, count)
    order, offset = torch.randperm(count, generator=generator), 0
    for _ in range(iterations):
        if offset + batch_size > count:
            order, offset = torch.randperm(count, generator=generator), 0
        yield order[offset:offset + batch_size]
        offset += batch_size


def bc_train(features: np.ndarray, actions: np.ndarray, config: TrainConfig = TrainConfig(),
             policy: Optional[PolicyModel] = None, iterations: Optional[int] = None,
             progress: bool = False) -> Tuple[PolicyModel, TrainTrace]:
    """Fits the policy mean to the expert actions by mean squared error.

    Returns the deterministic-mode policy and the per-iteration training loss.
    """
    features = torch.as_tensor(features, dtype=torch.float64)
    actions = torch.as_tensor(actions, dtype=torch.float64)
    if len(features) == 0:
        raise ValidationError('behaviour cloning needs a non-empty dataset')
    if len(actions) != len(features):
        raise ValidationError(f'{len(features)} feature rows but {len(actions)} actions')
    if policy is None:
        policy = PolicyModel.create(config.hidden_sizes, config.exploration_std, config.rng_seed,
                                    feature_size=features.shape[1])
    iterations = config.bc_iterations if iterations is None else iterations
    rule = build_optimizer(policy, config.bc_learning_rate, config)
    trace = TrainTrace('loss')

    batches = minibatches(len(features), config.batch_size, iterations, config.rng_seed)
    for iteration, batch in enumerate(tqdm(batches, total=iterations, disable=not progress, desc='bc')):
        loss = compute_gradients(rule, lambda: ((policy(features[batch]) - actions[batch]) ** 2).mean())
        if not torch.isfinite(loss):
            raise NonFiniteLoss(iteration, loss.item())
        rule.step()
        trace.record(iteration, loss.item())
        if (iteration + 1) % config.log_interval == 0:
            window = trace.values[-config.log_interval:]
            logger.info('bc iteration %d: mean loss %.6f', iteration + 1, float(np.mean(window)))
    return policy.as_deterministic(), trace
