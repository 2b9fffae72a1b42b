import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from stochastic_rim.errors import ConfigurationError
from .config import env_default

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker cap: explicit value, then STOCHASTIC_RIM_THREADS, then all cores."""
    if threads is None:
        env = env_default("THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigurationError(f"STOCHASTIC_RIM_THREADS must be an integer, got {env!r}")
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {threads}")
    return threads


def map_paths(worker: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Apply ``worker`` to every item, in parallel processes when allowed.

    Results come back in item order, so aggregates never depend on the worker
    count. ``worker`` must be picklable (a module-level function or a
    functools.partial of one).
    """
    items = list(items)
    n_workers = min(resolve_threads(threads), len(items))
    if n_workers <= 1:
        return [worker(item) for item in items]
    logger.debug(f"Dispatching {len(items)} work units to {n_workers} processes")
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(worker, items))
