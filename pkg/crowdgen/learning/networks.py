"""Fully connected networks shared by the policy and the discriminator, plus the model file format."""
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import DimensionMismatch, ValidationError
from ..perception import FEATURE_SIZE

MODEL_SCHEMA_VERSION = 1
ACTION_SIZE = 2

DESK_HIDDEN = (64, 64, 64)
PAPER_HIDDEN = (100,) * 6


class Mlp(nn.Module):
    """tanh hidden layers and a linear output layer, float64 throughout."""

    def __init__(self, layer_sizes: Sequence[int], seed: int = 0) -> None:
        super().__init__()
        if len(layer_sizes) < 2 or min(layer_sizes) < 1:
            raise ValidationError(f'invalid layer sizes {list(layer_sizes)}')
        self.layer_sizes = tuple(int(n) for n in layer_sizes)
        self.layers = nn.ModuleList(
            nn.Linear(n_in, n_out, dtype=torch.float64)
            for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        self.reset_parameters(seed)

    @torch.no_grad()
    def reset_parameters(self, seed: int) -> None:
        """Glorot-uniform weights and zero biases from a generator seeded with `seed`."""
        generator = torch.Generator().manual_seed(seed)
        for layer in self.layers:
            bound = math.sqrt(6.0 / (layer.in_features + layer.out_features))
            layer.weight.copy_(torch.rand(layer.weight.shape, generator=generator, dtype=torch.float64) * 2 * bound - bound)
            layer.bias.zero_()

    @property
    def in_features(self) -> int:
        return self.layer_sizes[0]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for layer in self.layers[:-1]:
            x = torch.tanh(layer(x))
        return self.layers[-1](x)


def mlp_forward(mlp: Mlp, inputs: Union[np.ndarray, torch.Tensor]) -> torch.Tensor:
    inputs = torch.as_tensor(inputs, dtype=torch.float64)
    if inputs.shape[-1] != mlp.in_features:
        raise DimensionMismatch(f'expected {mlp.in_features} inputs, got {inputs.shape[-1]}')
    return mlp(inputs)


class PolicyModel(nn.Module):
    """Diagonal Gaussian around the network output; `deterministic` drops the noise."""

    def __init__(self, mlp: Mlp, sigma: float = 0.5, deterministic: bool = False) -> None:
        super().__init__()
        if sigma < 0:
            raise ValidationError('exploration std must be non-negative')
        if mlp.layer_sizes[-1] != ACTION_SIZE:
            raise DimensionMismatch(f'policy network must output {ACTION_SIZE} values')
        self.mlp = mlp
        self.sigma = float(sigma)
        self.deterministic = deterministic

    @classmethod
    def create(cls, hidden: Sequence[int] = DESK_HIDDEN, sigma: float = 0.5, seed: int = 0,
               feature_size: int = FEATURE_SIZE) -> 'PolicyModel':
        return cls(Mlp([feature_size, *hidden, ACTION_SIZE], seed), sigma)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return mlp_forward(self.mlp, features)

    def as_deterministic(self) -> 'PolicyModel':
        return PolicyModel(self.mlp, self.sigma, deterministic=True)

    def log_prob(self, features: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        assert self.sigma > 0
        mean = self(features)
        return (-0.5 * ((actions - mean) / self.sigma) ** 2).sum(-1) \
            - ACTION_SIZE * (math.log(self.sigma) + 0.5 * math.log(2 * math.pi))

    def entropy(self) -> torch.Tensor:
        return torch.tensor(ACTION_SIZE * (0.5 + 0.5 * math.log(2 * math.pi) + math.log(self.sigma)),
                            dtype=torch.float64)

    def kl(self, old_mean: torch.Tensor, new_mean: torch.Tensor) -> torch.Tensor:
        """Mean KL between equal-covariance Gaussians."""
        return ((new_mean - old_mean) ** 2).sum(-1).mean() / (2 * self.sigma ** 2)


class Discriminator(nn.Module):
    """D(s, a) in (0, 1) over concatenated features and action."""

    def __init__(self, hidden: Sequence[int] = DESK_HIDDEN, seed: int = 1, feature_size: int = FEATURE_SIZE) -> None:
        super().__init__()
        self.mlp = Mlp([feature_size + ACTION_SIZE, *hidden, 1], seed)

    def logits(self, features: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        x = torch.cat([torch.as_tensor(features, dtype=torch.float64),
                       torch.as_tensor(actions, dtype=torch.float64)], -1)
        return mlp_forward(self.mlp, x).squeeze(-1)

    def forward(self, features: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.logits(features, actions))

    def log_d(self, features: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        return F.logsigmoid(self.logits(features, actions))


@dataclass
class MlpParams:
    """Serialisable form of an :class:`Mlp`; weights are row-major ``(out, in)`` lists."""
    layer_sizes: List[int]
    weights: List[List[List[float]]]
    biases: List[List[float]]
    activation: str = 'tanh'
    sigma: float = 0.0
    schema_version: int = MODEL_SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.schema_version != MODEL_SCHEMA_VERSION:
            raise ValidationError(f'unsupported model schema version {self.schema_version}')
        if self.activation != 'tanh':
            raise ValidationError(f'unsupported activation {self.activation!r}')
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise DimensionMismatch('layer count does not match the layer sizes')
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            w, b = np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64)
            if w.shape != (self.layer_sizes[k + 1], self.layer_sizes[k]) or b.shape != (self.layer_sizes[k + 1],):
                raise DimensionMismatch(f'layer {k} has shapes {w.shape} and {b.shape}')
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError(f'layer {k} has non-finite parameters')

    @classmethod
    def from_mlp(cls, mlp: Mlp, sigma: float = 0.0) -> 'MlpParams':
        return cls(layer_sizes=list(mlp.layer_sizes),
                   weights=[layer.weight.detach().tolist() for layer in mlp.layers],
                   biases=[layer.bias.detach().tolist() for layer in mlp.layers],
                   sigma=sigma)

    def to_mlp(self) -> Mlp:
        mlp = Mlp(self.layer_sizes)
        with torch.no_grad():
            for layer, w, b in zip(mlp.layers, self.weights, self.biases):
                layer.weight.copy_(torch.tensor(w, dtype=torch.float64))
                layer.bias.copy_(torch.tensor(b, dtype=torch.float64))
        return mlp

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': self.schema_version,
            'layer_sizes': self.layer_sizes,
            'activation': self.activation,
            'weights': self.weights,
            'biases': self.biases,
            'sigma': self.sigma,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MlpParams':
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValidationError(f'malformed model file: {exc}') from exc


def save_policy(policy: PolicyModel, path: Union[str, Path]) -> None:
    params = MlpParams.from_mlp(policy.mlp, policy.sigma)
    Path(path).write_text(json.dumps(params.to_dict(), sort_keys=True) + '\n')


def load_policy(path: Union[str, Path], deterministic: bool = True) -> PolicyModel:
    params = MlpParams.from_dict(json.loads(Path(path).read_text()))
    return PolicyModel(params.to_mlp(), params.sigma, deterministic)


def parameter_vector(module: nn.Module) -> torch.Tensor:
    return torch.cat([p.detach().reshape(-1) for p in module.parameters()])


def assign_parameters(module: nn.Module, vector: torch.Tensor) -> None:
    offset = 0
    with torch.no_grad():
        for p in module.parameters():
            p.copy_(vector[offset:offset + p.numel()].view_as(p))
            offset += p.numel()
