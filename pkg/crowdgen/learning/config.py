from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import pandas as pd

from ..errors import ValidationError
from .networks import DESK_HIDDEN

OPTIMIZERS = ('rmsprop', 'kfac')


@dataclass(frozen=True)
class TrainConfig:
    bc_learning_rate: float = 1e-4
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-8
    batch_size: int = 256
    bc_iterations: int = 20000

    gail_learning_rate: float = 1e-2
    discriminator_learning_rate: float = 1e-4
    discount: float = 0.99
    entropy_weight: float = 0.0
    clip: float = 0.2
    gail_iterations: int = 2000
    scenarios_per_iteration: int = 4
    discriminator_steps: int = 1
    bc_warm_start: bool = False
    kl_backtracks: int = 10

    hidden_sizes: Tuple[int, ...] = DESK_HIDDEN
    exploration_std: float = 0.5

    optimizer: str = 'rmsprop'
    kfac_damping: float = 1e-3
    kfac_cov_ema_decay: float = 0.95
    kfac_momentum: float = 0.9

    log_interval: int = 500
    rng_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'hidden_sizes', tuple(self.hidden_sizes))
        if min(self.bc_learning_rate, self.gail_learning_rate, self.discriminator_learning_rate, self.rmsprop_eps) <= 0:
            raise ValidationError('learning rates and epsilon must be positive')
        if not 0 <= self.discount < 1:
            raise ValidationError(f'discount must lie in [0, 1), got {self.discount}')
        if self.entropy_weight < 0 or self.exploration_std < 0 or self.clip <= 0:
            raise ValidationError('entropy weight and exploration std must be non-negative, clip positive')
        if min(self.batch_size, self.scenarios_per_iteration, self.discriminator_steps, self.log_interval) < 1:
            raise ValidationError('batch size, scenario count, discriminator steps and log interval must be >= 1')
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(f'unknown optimizer {self.optimizer!r}, expected one of {OPTIMIZERS}')

    @property
    def max_kl(self) -> float:
        return self.clip ** 2 / 2


@dataclass
class TrainTrace:
    """Per-iteration training record written as ``iteration,<value>,<aux...>``."""
    value_name: str = 'loss'
    rows: List[Dict[str, float]] = field(default_factory=list)

    def record(self, iteration: int, value: float, **aux: float) -> None:
        self.rows.append({'iteration': iteration, self.value_name: float(value), **aux})

    @property
    def values(self) -> List[float]:
        return [row[self.value_name] for row in self.rows]

    def column(self, name: str) -> List[float]:
        return [row[name] for row in self.rows]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows)
        if frame.empty:
            return pd.DataFrame(columns=['iteration', self.value_name])
        return frame

    def save_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format='%.6f', lineterminator='\n')
