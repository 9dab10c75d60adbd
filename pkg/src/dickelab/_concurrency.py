"""Thread-pool sizing shared by restart- and resample-style loops.

DICKE_LAB_THREADS caps the worker count; results are reduced in task-index
order, so the outcome never depends on scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")


def max_workers(n_tasks: int) -> int:
    cap = os.environ.get("DICKE_LAB_THREADS")
    if cap is not None:
        try:
            limit = max(1, int(cap))
        except ValueError:
            limit = 1
    else:
        limit = os.cpu_count() or 1
    return max(1, min(n_tasks, limit))


def run_indexed(task: Callable[[int], T], indices: Sequence[int]) -> list[T]:
    """Evaluate ``task`` over indices, possibly in parallel, in index order."""
    workers = max_workers(len(indices))
    if workers == 1:
        return [task(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, indices))
