"""
Order-preserving map over independent per-point work.
"""

from concurrent.futures import ThreadPoolExecutor
from contextvars import ContextVar
from typing import Callable, Iterable, List, Optional, TypeVar

from src.core.config import settings

T = TypeVar("T")
R = TypeVar("R")

_worker_threads: ContextVar[Optional[int]] = ContextVar("worker_threads", default=None)


def set_worker_threads(threads: Optional[int]) -> None:
    """Worker count used by parallel_map calls without an explicit count."""
    _worker_threads.set(threads)


def worker_threads() -> int:
    return _worker_threads.get() or settings.THREADS


def parallel_map(
    fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None
) -> List[R]:
    """Apply fn to every item; results come back in input order.

    Without ``threads`` the count set for the current run is used, else MMSLAB_THREADS.
    """
    items = list(items)
    workers = min(threads or worker_threads(), max(len(items), 1))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
