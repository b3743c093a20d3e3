"""Deterministic worker-pool map used by all parallel operations."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_jobs() -> int:
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int | None = 1) -> list[R]:
    """Map ``fn`` over ``items`` with results in input order.

    Threads work here because the compression backends release the GIL (or
    block on subprocesses). Aggregation is by index, never arrival order, so
    the result is identical for any worker count.
    """
    seq: Sequence[T] = list(items)
    if jobs is None:
        jobs = default_jobs()
    if jobs <= 1 or len(seq) < 2:
        return [fn(item) for item in seq]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, seq))
