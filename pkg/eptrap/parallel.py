import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "EPTRAP_THREADS"


def worker_count(requested: Optional[int] = None) -> int:
    """Worker count for sample evaluation, capped by EPTRAP_THREADS"""
    count = requested or min(8, os.cpu_count() or 1)
    cap = os.getenv(THREADS_ENV, "").strip()
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            logger.warning(f"⚠️ Ignoring non-integer {THREADS_ENV}={cap!r}")
    return max(1, count)


def parallel_map(
    fn: Callable[[int, T], R], items: Sequence[T], workers: Optional[int] = None
) -> List[R]:
    """Evaluate fn(index, item) for every item, results in input order.

    The first exception raised by any task propagates once all tasks settle.
    """
    jobs = worker_count(workers)
    if jobs == 1 or len(items) <= 1:
        return [fn(i, item) for i, item in enumerate(items)]

    results: List[Optional[R]] = [None] * len(items)
    errors = {}
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        futures = {ex.submit(fn, i, item): i for i, item in enumerate(items)}
        for fut in as_completed(futures):
            i = futures[fut]
            try:
                results[i] = fut.result()
            except Exception as e:
                errors[i] = e
    if errors:
        raise errors[min(errors)]
    return results
