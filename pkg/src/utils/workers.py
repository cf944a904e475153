"""
Worker-pool helpers for demand sweeps.

Sweeps hand independent solver jobs to a process pool; results always
come back in input order so max-reductions do not depend on scheduling.
The ``CODED_GROUPCAST_THREADS`` environment variable caps the pool.

Usage:
    from src.utils.workers import parallel_map, resolve_worker_count

    values = parallel_map(solve_one, jobs, resolve_worker_count())
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from src.utils.limits import THREADS_ENV_VAR

log = logging.getLogger("workers")

T = TypeVar("T")
R = TypeVar("R")


def _env_cap() -> Optional[int]:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or not raw.strip():
        return None
    try:
        value = int(raw)
    except ValueError:
        log.warning("Ignoring %s=%r (not an integer)", THREADS_ENV_VAR, raw)
        return None
    return max(1, value)


def resolve_worker_count(requested: Optional[int] = None) -> int:
    """Return the worker count for a sweep.

    Starts from *requested* (or the CPU count), never exceeds the CPU
    count, and is capped by ``CODED_GROUPCAST_THREADS`` when set.
    """
    cpus = os.cpu_count() or 1
    workers = min(cpus, requested) if requested else cpus
    cap = _env_cap()
    if cap is not None:
        workers = min(workers, cap)
    return max(1, workers)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply *fn* to every item, in order.

    Runs inline when ``workers <= 1`` or there is at most one item;
    otherwise in a ``ProcessPoolExecutor``.  *fn* and the items must be
    picklable in the parallel case (module-level functions, plain data).
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    pool_size = min(workers, len(items))
    log.debug("Dispatching %d jobs to %d worker processes", len(items), pool_size,
              extra={"workers": pool_size})
    with ProcessPoolExecutor(max_workers=pool_size) as pool:
        return list(pool.map(fn, items))
