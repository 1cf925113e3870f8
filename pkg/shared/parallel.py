"""
Index-keyed fan-out for independent trials.

Each work item carries its own random substream, so results do not depend on
the worker count or on completion order; they are returned in item order.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import psutil

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    """Physical core count, falling back to 1."""
    return psutil.cpu_count(logical=False) or 1


def ordered_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    workers: Optional[int] = 1,
    chunksize: Optional[int] = None,
) -> List[R]:
    """Map `fn` over `items` with `workers` processes, preserving item order.

    `fn` must be a module-level callable so it can be pickled. workers <= 1
    runs in-process.
    """
    items = list(items)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    if chunksize is None:
        chunksize = max(1, len(items) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
