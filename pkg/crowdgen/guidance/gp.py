import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import torch

from ..errors import DegenerateKernel, ValidationError
from ..utils import cholesky_factor
from ..world import TrajectoryLog

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GpHyperparameters:
    """Fixed squared-exponential kernel over (x, y, t); nothing is fitted by marginal likelihood."""
    length_x: float = 2.0
    length_y: float = 2.0
    length_t: float = 5.0
    signal_variance: float = 1.0
    noise_variance: float = 0.01
    jitter: float = 1e-8
    max_points: int = 2000
    fallback_std: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.length_x, self.length_y, self.length_t, self.signal_variance, self.noise_variance) <= 0:
            raise ValidationError('GP hyperparameters must be positive')

    @property
    def length_scales(self) -> torch.Tensor:
        return torch.tensor([self.length_x, self.length_y, self.length_t], dtype=torch.float64)


@dataclass(eq=False)
class GpModel:
    inputs: torch.Tensor
    targets: torch.Tensor
    hyper: GpHyperparameters
    cholesky: torch.Tensor
    alpha: torch.Tensor

    def kernel(self, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
        return squared_exponential(a, b, self.hyper)


def squared_exponential(a: torch.Tensor, b: torch.Tensor, hyper: GpHyperparameters) -> torch.Tensor:
    scales = hyper.length_scales
    dist2 = torch.cdist(a / scales, b / scales) ** 2
    return hyper.signal_variance * torch.exp(-0.5 * dist2)


def training_pairs(logs: Sequence[TrajectoryLog]) -> Tuple[np.ndarray, np.ndarray]:
    """(x, y, t) -> commanded velocity for every recorded transition."""
    inputs, targets = [], []
    for log in logs:
        for track in log.tracks:
            if track.num_transitions == 0:
                continue
            steps = track.steps[:-1]
            inputs.append(np.column_stack([track.positions[:-1], steps * log.dt]))
            targets.append(track.velocities[:-1])
    if not inputs:
        return np.zeros((0, 3)), np.zeros((0, 2))
    return np.concatenate(inputs), np.concatenate(targets)


def fit_from_arrays(inputs: np.ndarray, targets: np.ndarray, hyper: GpHyperparameters = GpHyperparameters()) -> GpModel:
    if len(inputs) == 0:
        raise ValidationError('cannot fit a GP without training data')
    if len(inputs) > hyper.max_points:
        rng = np.random.default_rng(hyper.seed)
        keep = np.sort(rng.choice(len(inputs), size=hyper.max_points, replace=False))
        inputs, targets = inputs[keep], targets[keep]
    x = torch.as_tensor(inputs, dtype=torch.float64)
    y = torch.as_tensor(targets, dtype=torch.float64)
    gram = squared_exponential(x, x, hyper) + hyper.noise_variance * torch.eye(len(x), dtype=torch.float64)

    jitter = hyper.jitter
    while True:
        try:
            factor = cholesky_factor(gram, jitter)
            break
        except DegenerateKernel:
            if jitter >= 1e-4:
                raise
            jitter *= 100
            logger.warning('GP kernel matrix not positive definite, retrying with jitter %.0e', jitter)
    alpha = torch.cholesky_solve(y, factor)
    return GpModel(inputs=x, targets=y, hyper=hyper, cholesky=factor, alpha=alpha)


def fit_gp(logs: Sequence[TrajectoryLog], hyper: GpHyperparameters = GpHyperparameters()) -> GpModel:
    """Fits the expert velocity field; vx and vy share one kernel system."""
    if not logs:
        raise ValidationError('fit_gp needs at least one expert log')
    inputs, targets = training_pairs(logs)
    logger.debug('fitting GP on %d of %d samples', min(len(inputs), hyper.max_points), len(inputs))
    return fit_from_arrays(inputs, targets, hyper)


def gp_predict(model: GpModel, query) -> Tuple[np.ndarray, float]:
    """Posterior mean velocity and predictive variance (observation noise included) at (x, y, t)."""
    q = torch.as_tensor(np.asarray(query, dtype=np.float64).reshape(1, 3))
    k_star = model.kernel(q, model.inputs)
    mean = (k_star @ model.alpha)[0]
    v = torch.linalg.solve_triangular(model.cholesky, k_star.T, upper=False)
    variance = model.hyper.signal_variance - float((v ** 2).sum()) + model.hyper.noise_variance
    return mean.numpy(), max(variance, model.hyper.noise_variance)
