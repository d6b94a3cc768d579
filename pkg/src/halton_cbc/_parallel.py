"""Thread-pool helpers whose results never depend on the worker count."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

THREADS_ENV = "HALTON_CBC_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: ``HALTON_CBC_THREADS`` if set, else ``threads``, else 1."""
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            threads = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV}={env!r} is not an integer") from None
    if threads is None:
        return 1
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return threads


def max_threads() -> int:
    return os.cpu_count() or 1


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``list(map(fn, items))``, optionally on a thread pool; output order is input order."""
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
