"""Order-preserving map over replicas, optionally on a process pool.

Results never depend on the worker count: every task carries its own
derived seed and results are returned in task order.
"""
from __future__ import annotations

import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

# below this many tasks the pool start-up cost dominates
_MIN_PARALLEL_TASKS = 2_000


def worker_count() -> int:
    env = os.environ.get("EXCHMARKOV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn: Callable[[T], R], items: Sequence[T], chunksize: int = 256) -> list[R]:
    workers = min(worker_count(), max(1, len(items) // chunksize))
    if workers <= 1 or len(items) < _MIN_PARALLEL_TASKS:
        return [fn(x) for x in items]
    try:
        pickle.dumps(fn)
    except Exception:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
