"""
Worker pool for independent simulation jobs.

Grid points, noise trajectories and optimizer probes are submitted here.
Results come back in submission order so outputs do not depend on the
number of workers; only the caller writes files.
"""

import concurrent.futures
import logging
from typing import Callable, Iterable, List, Optional, TypeVar

from config.settings import settings

logger = logging.getLogger("vqaa.pool")

T = TypeVar("T")
R = TypeVar("R")


def map_jobs(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """
    Apply ``fn`` to every item, serially or on a process pool.

    Args:
        fn: Picklable callable (module-level function or functools.partial)
        items: Job inputs
        workers: Process count; 1 runs in the calling process

    Returns:
        List[R]: Results in the order of ``items``
    """
    items = list(items)
    workers = workers or settings.WORKERS
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    logger.info(f"Dispatching {len(items)} jobs to {workers} workers")
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(fn, item) for item in items]
        return [future.result() for future in futures]
