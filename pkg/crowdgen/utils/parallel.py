import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

THREADS_ENV = 'CROWDGEN_THREADS'


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get(THREADS_ENV)
    count = requested or os.cpu_count() or 1
    if cap:
        count = min(count, max(1, int(cap)))
    return count


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """Maps `fn` over `items` in a process pool; results keep the input order."""
    items = list(items)
    workers = min(worker_count(workers), max(1, len(items)))
    if workers <= 1:
        return [fn(item) for item in items]
    logger.debug('mapping %s over %d items with %d workers', getattr(fn, '__name__', fn), len(items), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
