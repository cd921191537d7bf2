"""Process pool for sweeps and scans: one independent simulation per task."""
import logging
from multiprocessing import Pool
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Results in input order, whatever the scheduling.

    ``func`` must be a module-level function so it pickles; tasks are sent as
    JSON strings by the callers so workers share nothing mutable.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    processes = min(workers, len(items))
    logging.info(f"Dispatching {len(items)} tasks to {processes} workers")
    with Pool(processes) as pool:
        return pool.map(func, items, chunksize=1)
