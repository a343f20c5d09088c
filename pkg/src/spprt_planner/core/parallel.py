"""
Bounded worker pool for batch sweeps.

Results always come back in input order, so every output is identical for any
worker count.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def resolve_workers(workers: Optional[int]) -> int:
    """None or 0 means one worker per CPU; anything else is clamped to >= 1."""
    if not workers:
        return os.cpu_count() or 1
    return max(1, int(workers))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = 1) -> List[R]:
    """
    Map ``fn`` over ``items`` with at most ``workers`` processes.

    ``fn`` must be a picklable module-level callable when workers > 1.
    """
    items = list(items)
    count = min(resolve_workers(workers), len(items)) if items else 1
    if count <= 1:
        return [fn(item) for item in items]
    logger.debug(f"Dispatching {len(items)} tasks to {count} workers")
    with ProcessPoolExecutor(max_workers=count) as pool:
        return list(pool.map(fn, items))
