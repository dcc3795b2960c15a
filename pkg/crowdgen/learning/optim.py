"""Optimiser rules behind one interface: RMSprop or K-FAC, both with pass tracking."""
from contextlib import nullcontext
from typing import Callable, ContextManager

import torch
import torch.nn as nn

from .config import TrainConfig
from .kfac import KFAC


class RmsPropRule(object):
    def __init__(self, model: nn.Module, learning_rate: float, decay: float = 0.9, eps: float = 1e-8) -> None:
        self.model = model
        self.optimizer = torch.optim.RMSprop(model.parameters(), lr=learning_rate, alpha=decay, eps=eps)

    def track_forward(self) -> ContextManager:
        return nullcontext()

    def track_backward(self) -> ContextManager:
        return nullcontext()

    def zero_grad(self) -> None:
        self.optimizer.zero_grad(set_to_none=False)

    def step(self) -> None:
        self.optimizer.step()


class KfacRule(object):
    def __init__(self, model: nn.Module, learning_rate: float, config: TrainConfig) -> None:
        self.model = model
        self.kfac = KFAC(model, learning_rate, damping=config.kfac_damping,
                         cov_ema_decay=config.kfac_cov_ema_decay, momentum=config.kfac_momentum,
                         norm_constraint=config.max_kl)

    def track_forward(self) -> ContextManager:
        return self.kfac.track_forward()

    def track_backward(self) -> ContextManager:
        return self.kfac.track_backward()

    def zero_grad(self) -> None:
        self.kfac.zero_grad()

    def step(self) -> None:
        self.kfac.step()


def build_optimizer(model: nn.Module, learning_rate: float, config: TrainConfig = TrainConfig()):
    if config.optimizer == 'kfac':
        return KfacRule(model, learning_rate, config)
    return RmsPropRule(model, learning_rate, config.rmsprop_decay, config.rmsprop_eps)


def compute_gradients(rule, loss_fn: Callable[[], torch.Tensor]) -> torch.Tensor:
    """Evaluates `loss_fn`, back-propagates it under the rule's pass tracking and returns it detached."""
    rule.zero_grad()
    with rule.track_forward():
        loss = loss_fn()
    with rule.track_backward():
        loss.backward()
    return loss.detach()
