"""Small dense linear-algebra helpers shared by the K-FAC blocks and the Gaussian process."""
from typing import Iterable, Optional, Tuple

import torch

from ..errors import DegenerateKernel


def center(rows: torch.Tensor) -> torch.Tensor:
    return rows - rows.mean(dim=0, keepdim=True)


def compute_cov(rows: torch.Tensor, normalizer: Optional[float] = None) -> torch.Tensor:
    """Symmetrised second moment ``rows^T rows / n`` of a batch of row samples.

    Args:
        rows: 2D tensor, one sample per row.
        normalizer: divisor, the number of rows by default.

    Returns:
        Square tensor sized by the number of columns of `rows`.
    """
    assert rows.dim() == 2, f'expected a batch of rows, got shape {tuple(rows.shape)}'
    n = rows.shape[0] if normalizer is None else normalizer
    moment = rows.T @ rows / n
    return 0.5 * (moment + moment.T)


def append_homog(rows: torch.Tensor, value: float = 1.0) -> torch.Tensor:
    """Adds a constant trailing column so a bias folds into the weight matrix."""
    ones = rows.new_full((*rows.shape[:-1], 1), value)
    return torch.cat((rows, ones), dim=-1)


def cholesky_factor(matrix: torch.Tensor, jitter: float = 0.0) -> torch.Tensor:
    """Lower Cholesky factor of `matrix + jitter * I`; raises DegenerateKernel if not positive definite."""
    eye = torch.eye(matrix.shape[-1], dtype=matrix.dtype, device=matrix.device)
    factor, info = torch.linalg.cholesky_ex(matrix + jitter * eye)
    if int(info) != 0:
        raise DegenerateKernel(f'matrix of size {matrix.shape[-1]} is not positive definite (minor {int(info)})')
    return factor


def inverse_by_cholesky(matrix: torch.Tensor, damping: torch.Tensor) -> torch.Tensor:
    return torch.cholesky_inverse(cholesky_factor(matrix, float(damping)))


def compute_pi_adjusted_damping(left: torch.Tensor, right: torch.Tensor,
                                damping: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    # left and right damping multiply to damping**2, split by the ratio of mean eigenvalues
    left_mean = torch.trace(left) / left.shape[0]
    right_mean = torch.trace(right) / right.shape[0]
    if left_mean <= 0 or right_mean <= 0:
        return damping, damping
    ratio = torch.sqrt(left_mean / right_mean)
    return damping * ratio, damping / ratio


def inner_product(first: Iterable[torch.Tensor], second: Iterable[torch.Tensor]) -> torch.Tensor:
    return sum(torch.sum(a * b) for a, b in zip(first, second))


def scalar_product(scalar, tensors: Iterable[torch.Tensor]) -> Tuple[torch.Tensor, ...]:
    return tuple(scalar * tensor for tensor in tensors)
