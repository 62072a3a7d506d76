"""Worker-count resolution and ordered parallel map.

Callers hand in independent tasks that carry their own RNG substreams, so
results never depend on how many workers ran them.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "ROBUST_SCAN_THREADS"


def resolve_workers(workers: int | None = None) -> int:
    """Explicit ``workers`` wins, then ``ROBUST_SCAN_THREADS``; 0 means one per CPU."""
    if workers is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ValueError("worker count must be >= 0")
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers


def ordered_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    workers: int | None = None,
    processes: bool = False,
) -> list[R]:
    """``[fn(x) for x in items]``, possibly spread over a pool; order is kept."""
    items = list(items)
    n = min(resolve_workers(workers), max(len(items), 1))
    if n <= 1:
        return [fn(x) for x in items]
    pool_cls = ProcessPoolExecutor if processes else ThreadPoolExecutor
    with pool_cls(max_workers=n) as pool:
        return list(pool.map(fn, items))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``key`` of a master seed (any 64-bit int)."""
    return np.random.default_rng(np.random.SeedSequence(seed % 2**64, spawn_key=key))
