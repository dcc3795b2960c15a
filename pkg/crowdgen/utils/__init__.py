from .linalg import (append_homog, center, cholesky_factor, compute_cov, compute_pi_adjusted_damping, inner_product,
                     inverse_by_cholesky, scalar_product)
from .parallel import parallel_map, worker_count
