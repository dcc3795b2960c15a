"""Kronecker-factored natural-gradient steps for the fully connected policy and discriminator.

Each ``nn.Linear`` layer gets a Fisher block approximating its Fisher matrix by the Kronecker
product of the input second moment and the output-gradient second moment. Other modules fall
back to the plain gradient.
"""
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Tuple

import torch
import torch.nn as nn

from ..utils import (append_homog, center, compute_cov, compute_pi_adjusted_damping, inner_product,
                     inverse_by_cholesky, scalar_product)

Grads = Tuple[torch.Tensor, ...]


class PassRecorder(object):
    """Switch the layer hooks consult; a pass is recorded only while the switch is on."""

    def __init__(self, name: str) -> None:
        self.name = name
        self.recorded = 0
        self._on = False

    @contextmanager
    def __call__(self) -> Iterator[None]:
        assert not self._on, f'{self.name} recording is already on'
        self._on = True
        try:
            yield
        finally:
            self._on = False
            self.recorded += 1

    def __bool__(self) -> bool:
        return self._on


class KroneckerFactor(object):
    """Exponentially decayed per-sample second moment of one side of a linear layer."""

    def __init__(self, size: int, dtype: torch.dtype, device: Optional[torch.device] = None) -> None:
        self._sum = torch.zeros((size, size), dtype=dtype, device=device)
        self._weight = torch.zeros((), dtype=dtype, device=device)
        self.batches = 0

    @property
    def ready(self) -> bool:
        return self.batches > 0

    @property
    def value(self) -> torch.Tensor:
        assert self.ready, 'no batch recorded'
        return self._sum / self._weight

    def observe(self, rows: torch.Tensor, decay: float = 1.0) -> None:
        assert rows.dim() == 2 and rows.shape[1] == self._sum.shape[0]
        self._sum.mul_(decay).add_(compute_cov(rows))
        self._weight.mul_(decay).add_(1.0)
        self.batches += 1

    def reset(self) -> None:
        self._sum.zero_()
        self._weight.zero_()
        self.batches = 0


class LinearFisherBlock(object):
    def __init__(self, module: nn.Linear, forward: PassRecorder, backward: PassRecorder,
                 center: bool = False) -> None:
        self.module = module
        self._in_features = module.in_features + int(module.bias is not None)
        self._out_features = module.out_features
        dtype, device = module.weight.dtype, module.weight.device
        self._activations_cov = KroneckerFactor(self._in_features, dtype, device)
        self._sensitivities_cov = KroneckerFactor(self._out_features, dtype, device)
        self._forward = forward
        self._backward = backward
        self._center = center
        self._activations: Optional[torch.Tensor] = None
        self._sensitivities: Optional[torch.Tensor] = None
        self._handles = [
            module.register_forward_hook(self._forward_hook),
            module.register_full_backward_hook(self._backward_hook),
        ]

    @torch.no_grad()
    def _forward_hook(self, module: nn.Linear, inp: Tuple[torch.Tensor], out: torch.Tensor) -> None:
        if self._forward:
            self._activations = inp[0].detach().reshape(-1, module.in_features).clone()

    @torch.no_grad()
    def _backward_hook(self, module: nn.Linear, grad_inp, grad_out: Tuple[torch.Tensor]) -> None:
        if self._backward:
            # the loss is a batch mean, so rescale to per-sample sensitivities
            sen = grad_out[0].detach().reshape(-1, self._out_features)
            self._sensitivities = sen * sen.shape[0]

    def remove_hooks(self) -> None:
        for handle in self._handles:
            handle.remove()

    @property
    def has_bias(self) -> bool:
        return self.module.bias is not None

    @property
    def vars(self) -> List[torch.Tensor]:
        return [self.module.weight, self.module.bias] if self.has_bias else [self.module.weight]

    @property
    def grads(self) -> List[Optional[torch.Tensor]]:
        return [tensor.grad for tensor in self.vars]

    @property
    def is_ready(self) -> bool:
        return self._activations_cov.ready and self._sensitivities_cov.ready

    def update_cov(self, cov_ema_decay: float = 1.0) -> None:
        if self._activations is None or self._sensitivities is None:
            return
        act, sen = self._activations, self._sensitivities
        if self._center:
            act, sen = center(act), center(sen)
        if self.has_bias:
            act = append_homog(act)
        self._activations_cov.observe(act, cov_ema_decay)
        self._sensitivities_cov.observe(sen, cov_ema_decay)
        self._activations, self._sensitivities = None, None

    def reset(self) -> None:
        self._activations_cov.reset()
        self._sensitivities_cov.reset()

    def grads_to_mat(self, grads: Grads) -> torch.Tensor:
        if self.has_bias:
            weights, bias = grads
            return torch.cat([weights, bias[:, None]], -1)
        return grads[0]

    def mat_to_grads(self, mat_grads: torch.Tensor) -> Grads:
        if self.has_bias:
            return mat_grads[:, :-1], mat_grads[:, -1]
        return mat_grads,

    def multiply_preconditioner(self, grads: Grads, damping: torch.Tensor) -> Grads:
        act_cov, sen_cov = self._activations_cov.value, self._sensitivities_cov.value
        a_damp, s_damp = compute_pi_adjusted_damping(act_cov, sen_cov, damping ** 0.5)
        nat_grads = inverse_by_cholesky(sen_cov, s_damp) @ self.grads_to_mat(grads) @ inverse_by_cholesky(act_cov, a_damp)
        return self.mat_to_grads(nat_grads)

    def set_gradients(self, new_grads: Grads) -> None:
        for var, grad in zip(self.vars, new_grads):
            var.grad.copy_(grad)


class KFAC(object):
    """Natural-gradient optimiser with damping, covariance EMAs, momentum and a norm constraint.

    The forward and backward passes whose statistics should enter the Fisher estimate must run
    inside ``track_forward()`` and ``track_backward()``::

        with kfac.track_forward():
            loss = ...
        with kfac.track_backward():
            loss.backward()
        kfac.step()
    """

    def __init__(self,
                 model: nn.Module,
                 learning_rate: float,
                 damping: float = 1e-3,
                 cov_ema_decay: float = 0.95,
                 momentum: float = 0.9,
                 norm_constraint: Optional[float] = None,
                 center: bool = False) -> None:
        self.model = model
        self.learning_rate = learning_rate
        dtype = next(model.parameters()).dtype
        self._damping = torch.tensor(damping, dtype=dtype)
        self._cov_ema_decay = cov_ema_decay
        self._momentum = momentum
        self._norm_constraint = norm_constraint
        self.counter = 0

        self.track_forward = PassRecorder('forward')
        self.track_backward = PassRecorder('backward')
        self.blocks = [LinearFisherBlock(module, self.track_forward, self.track_backward, center)
                       for module in model.modules() if type(module) is nn.Linear]
        self._velocities: Dict[LinearFisherBlock, Grads] = {}

    def zero_grad(self) -> None:
        self.model.zero_grad()

    def reset_cov(self) -> None:
        for block in self.blocks:
            block.reset()

    def update_cov(self) -> None:
        for block in self.blocks:
            block.update_cov(self._cov_ema_decay)

    @property
    def damping(self) -> torch.Tensor:
        return self._damping.clone()

    def _clip_coeff(self, grads_and_blocks, precon_and_blocks) -> torch.Tensor:
        """min(1, sqrt(c / (lr^2 g^T F^-1 g))), bounding the approximate Fisher norm of the update."""
        sq_norm = sum(inner_product(g, p) for (g, _), (p, _) in zip(grads_and_blocks, precon_and_blocks))
        sq_norm_up = sq_norm * self.learning_rate ** 2
        one = torch.ones((), dtype=self._damping.dtype)
        if sq_norm_up <= 0:
            return one
        return torch.min(one, torch.sqrt(self._norm_constraint / sq_norm_up))

    def _update_velocities(self, updates_and_blocks) -> List[Tuple[Grads, LinearFisherBlock]]:
        result = []
        for grads, block in updates_and_blocks:
            previous = self._velocities.get(block)
            if previous is None:
                velocity = tuple(g.clone() for g in grads)
            else:
                velocity = tuple(self._momentum * v + g for v, g in zip(previous, grads))
            self._velocities[block] = velocity
            result.append((velocity, block))
        return result

    @torch.no_grad()
    def step(self) -> None:
        self.update_cov()
        grads_and_blocks = [(tuple(block.grads), block) for block in self.blocks
                            if block.is_ready and all(g is not None for g in block.grads)]
        updates = [(block.multiply_preconditioner(grads, self._damping), block) for grads, block in grads_and_blocks]
        if self._norm_constraint is not None and updates:
            coeff = self._clip_coeff(grads_and_blocks, updates)
            updates = [(scalar_product(coeff, grads), block) for grads, block in updates]
        if self._momentum:
            updates = self._update_velocities(updates)
        for grads, block in updates:
            block.set_gradients(grads)
        # parameters outside any block keep their plain gradient
        for param in self.model.parameters():
            if param.grad is not None:
                param.add_(param.grad, alpha=-self.learning_rate)
        self.counter += 1
